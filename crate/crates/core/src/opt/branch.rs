//! Branch-and-bound over LP relaxations.
//!
//! Depth-first with the child nearest the relaxation value explored first,
//! branching on the most fractional binary. A node is pruned when its
//! relaxation cannot beat the incumbent by more than the absolute gap, so the
//! returned objective is within `delta_gap` of the true optimum.

use std::time::Instant;

use super::{simplex, validate_bounded, MilpModel, SolveResult, SolveStats, SolveStatus, SolverConfig};
use crate::{Error, Result};

struct Node {
    /// Cumulative binary fixings (variable, value).
    fixes: Vec<(usize, u8)>,
    /// Relaxation objective of the parent; a lower bound for this node.
    bound: f64,
}

/// Maps a relaxation assignment to candidate exact binary values. Callers
/// with model knowledge (e.g. an encoder that can replay the underlying
/// system) use this to propose dives; every proposal is still verified by an
/// LP before it can become the incumbent, so hints affect speed only.
pub type IncumbentHint<'a> = dyn Fn(&[f64]) -> Option<Vec<(usize, f64)>> + 'a;

pub fn solve_milp(model: &MilpModel, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_milp_hinted(model, cfg, None)
}

pub fn solve_milp_hinted(
    model: &MilpModel,
    cfg: &SolverConfig,
    hint: Option<&IncumbentHint<'_>>,
) -> Result<SolveResult> {
    model.check_well_formed()?;
    validate_bounded(model)?;
    let start = Instant::now();

    let binaries: Vec<usize> = model.binaries().collect();
    if binaries.is_empty() {
        let mut r = simplex::solve(model, cfg)?;
        r.stats.nodes = 1;
        r.stats.wall = start.elapsed();
        return Ok(r);
    }

    let original_bounds: Vec<(usize, (f64, f64))> =
        binaries.iter().map(|&b| (b, model.bounds(b))).collect();
    let mut work = model.clone();

    let mut stack = vec![Node { fixes: Vec::new(), bound: f64::NEG_INFINITY }];
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes: u64 = 0;
    let mut lp_iterations: u64 = 0;

    while let Some(node) = stack.pop() {
        // The incumbent may have improved since this node was queued.
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - cfg.delta_gap {
                continue;
            }
        }
        nodes += 1;
        if nodes > cfg.node_limit {
            return Err(Error::ResourceExhausted(format!(
                "branch-and-bound node limit {} exceeded",
                cfg.node_limit
            )));
        }
        for &(b, (lo, hi)) in &original_bounds {
            work.set_bounds(b, lo, hi);
        }
        for &(b, v) in &node.fixes {
            work.set_bounds(b, v as f64, v as f64);
        }
        let rel = simplex::solve(&work, cfg)?;
        lp_iterations += rel.stats.lp_iterations;
        match rel.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                // validate_bounded should have ruled this out.
                return Err(Error::Numerical(
                    "node relaxation unbounded despite bounded variables".into(),
                ));
            }
            SolveStatus::Optimal => {}
        }
        let obj = rel.objective.expect("optimal has objective");
        if let Some((inc, _)) = &incumbent {
            if obj >= inc - cfg.delta_gap {
                continue;
            }
        }

        // Most fractional binary, ties to the lowest index.
        let mut branch_var: Option<(usize, f64)> = None;
        for &b in &binaries {
            let v = rel.assignment[b];
            if (v - v.round()).abs() > cfg.eps_int {
                let dist = (v - v.floor() - 0.5).abs();
                if branch_var.is_none_or(|(_, d)| dist < d) {
                    branch_var = Some((b, dist));
                }
            }
        }

        // Dive: pin every binary to an exact value and solve once. Feasible
        // dives give incumbents long before the tree reaches integral
        // leaves, which is what makes pruning bite. The hint proposes the
        // values when present (falling back to rounding the relaxation);
        // once an incumbent exists the dive runs only occasionally.
        let all_fixed = node.fixes.len() == binaries.len();
        let want_dive =
            branch_var.is_none() || incumbent.is_none() || nodes.is_multiple_of(16);
        let mut dived: Option<(f64, Vec<f64>)> = None;
        if branch_var.is_none() && all_fixed {
            dived = Some((obj, rel.assignment.clone()));
        } else if want_dive {
            let proposal = hint.and_then(|h| h(&rel.assignment));
            match proposal {
                Some(fixes) => {
                    for &b in &binaries {
                        let v = rel.assignment[b].round();
                        work.set_bounds(b, v, v);
                    }
                    for &(b, v) in &fixes {
                        work.set_bounds(b, v, v);
                    }
                }
                None => {
                    for &b in &binaries {
                        let v = rel.assignment[b].round();
                        work.set_bounds(b, v, v);
                    }
                }
            }
            let snap = simplex::solve(&work, cfg)?;
            lp_iterations += snap.stats.lp_iterations;
            if snap.status == SolveStatus::Optimal {
                dived = Some((
                    snap.objective.expect("optimal has objective"),
                    snap.assignment,
                ));
            }
        }
        if let Some((cand_obj, cand_x)) = dived {
            if incumbent.as_ref().is_none_or(|(inc, _)| cand_obj < *inc) {
                incumbent = Some((cand_obj, cand_x));
            }
        } else if branch_var.is_none() {
            // Relaxation integral within tolerance but its rounding is
            // infeasible: split on some still-free binary rather than
            // accepting a tolerance artifact.
            if let Some(&b) =
                binaries.iter().find(|b| !node.fixes.iter().any(|(f, _)| f == *b))
            {
                let mut zero = node.fixes.clone();
                zero.push((b, 0));
                let mut one = node.fixes.clone();
                one.push((b, 1));
                stack.push(Node { fixes: zero, bound: obj });
                stack.push(Node { fixes: one, bound: obj });
            }
            continue;
        }

        if let Some((bvar, _)) = branch_var {
            // Re-check: the dive may have closed the gap for this node.
            if let Some((inc, _)) = &incumbent {
                if obj >= inc - cfg.delta_gap {
                    continue;
                }
            }
            let v = rel.assignment[bvar];
            let (first, second) = if v >= 0.5 { (1u8, 0u8) } else { (0u8, 1u8) };
            let mut far = node.fixes.clone();
            far.push((bvar, second));
            let mut near = node.fixes.clone();
            near.push((bvar, first));
            stack.push(Node { fixes: far, bound: obj });
            stack.push(Node { fixes: near, bound: obj });
        }
    }

    let stats = SolveStats {
        nodes,
        lp_iterations,
        wall: start.elapsed(),
    };
    Ok(match incumbent {
        Some((obj, x)) => SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(obj),
            assignment: x,
            stats,
        },
        None => SolveResult {
            status: SolveStatus::Infeasible,
            objective: None,
            assignment: Vec::new(),
            stats,
        },
    })
}
