//! Independent ground truth: grid-sampled backprojection under-approximations
//! and exhaustive activation-pattern MILP solving. Used by tests, acceptance
//! runs, and the `oracle` CLI command — never by the solvers themselves.

use crate::dynamics::{relative_position, step_pair, PairSystem};
use crate::lingeo::{contains_point, Polytope};
use crate::opt::{solve_lp, MilpModel, SolveResult, SolveStats, SolveStatus, SolverConfig};
use crate::{Error, Result};

pub const DEFAULT_GRID_CAP: usize = 10_000_000;
const ENUM_BINARY_CAP: usize = 16;

/// Uniform grid over the stacked pair state.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub counts: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    cap: usize,
}

impl GridSpec {
    pub fn new(counts: Vec<usize>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if counts.len() != lower.len() || lower.len() != upper.len() {
            return Err(Error::Dimension("grid spec lengths disagree".into()));
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::InvalidArgument(
                "grid needs at least 2 samples per dimension".into(),
            ));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail this check
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::Schema("grid ranges must be finite with lower <= upper".into()));
        }
        Ok(Self { counts, lower, upper, cap: DEFAULT_GRID_CAP })
    }

    /// Grid spanning the pair's stacked workspace box.
    pub fn over_pair(pair: &PairSystem, counts: Vec<usize>) -> Result<Self> {
        let b = pair.stacked_box();
        Self::new(counts, b.lower, b.upper)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn total_points(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.counts.len()];
        for d in (0..self.counts.len()).rev() {
            let k = index % self.counts[d];
            index /= self.counts[d];
            let span = self.upper[d] - self.lower[d];
            x[d] = self.lower[d] + span * (k as f64) / ((self.counts[d] - 1) as f64);
        }
        x
    }
}

/// Grid states whose one-step successor lands in `target`, reported as their
/// current relative positions. An under-approximation of the true
/// backprojection set at grid resolution.
pub fn sample_rbpua(
    pair: &PairSystem,
    target: &Polytope,
    grid: &GridSpec,
) -> Result<Vec<[f64; 2]>> {
    if grid.counts.len() != pair.stacked_dim() {
        return Err(Error::Dimension(format!(
            "grid has {} dimensions, stacked state has {}",
            grid.counts.len(),
            pair.stacked_dim()
        )));
    }
    let total = grid.total_points();
    if total > grid.cap {
        return Err(Error::ResourceExhausted(format!(
            "grid has {total} points, cap is {}",
            grid.cap
        )));
    }
    if target.is_empty_marker() {
        return Ok(Vec::new());
    }

    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
        .min(total.max(1));
    let chunk = total.div_ceil(workers);
    let mut chunks: Vec<Result<Vec<[f64; 2]>>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || -> Result<Vec<[f64; 2]>> {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(total);
                    let mut hits = Vec::new();
                    for idx in lo..hi {
                        let x = grid.point(idx);
                        let next = step_pair(pair, &x)?;
                        let p_next = relative_position(pair, &next)?;
                        if contains_point(target, &p_next)? {
                            let p = relative_position(pair, &x)?;
                            hits.push([p[0], p[1]]);
                        }
                    }
                    Ok(hits)
                })
            })
            .collect();
        chunks = handles.into_iter().map(|h| h.join().expect("grid worker")).collect();
    });
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Solves the MILP by brute force: one LP per binary assignment, best optimal
/// wins. Capped at 16 binaries. `stats.nodes` counts LP solves.
pub fn enumerate_milp_oracle(model: &MilpModel, cfg: &SolverConfig) -> Result<SolveResult> {
    let binaries: Vec<usize> = model.binaries().collect();
    if binaries.len() > ENUM_BINARY_CAP {
        return Err(Error::ResourceExhausted(format!(
            "enumeration oracle capped at {ENUM_BINARY_CAP} binaries, model has {}",
            binaries.len()
        )));
    }
    let start = std::time::Instant::now();
    let mut work = model.clone();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0u64;
    let mut lp_iterations = 0u64;
    for mask in 0u32..(1u32 << binaries.len()) {
        for (bit, &b) in binaries.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            work.set_bounds(b, v, v);
        }
        let r = solve_lp(&work, cfg)?;
        nodes += 1;
        lp_iterations += r.stats.lp_iterations;
        match r.status {
            SolveStatus::Optimal => {
                let obj = r.objective.expect("optimal has objective");
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, r.assignment));
                }
            }
            SolveStatus::Infeasible => {}
            SolveStatus::Unbounded => {
                return Ok(SolveResult {
                    status: SolveStatus::Unbounded,
                    objective: None,
                    assignment: Vec::new(),
                    stats: SolveStats { nodes, lp_iterations, wall: start.elapsed() },
                });
            }
        }
    }
    let stats = SolveStats { nodes, lp_iterations, wall: start.elapsed() };
    Ok(match best {
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

/// CSV dump of sampled relative positions, consumed by the plot command.
pub fn write_rbpua_csv(points: &[[f64; 2]]) -> String {
    let mut s = String::from("px,py\n");
    for p in points {
        s.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    s
}

pub fn parse_rbpua_csv(text: &str) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line == "px,py") {
            continue;
        }
        let mut it = line.split(',');
        let (a, b) = (it.next(), it.next());
        if it.next().is_some() {
            return Err(Error::Parse(format!("line {}: expected two fields", lineno + 1)));
        }
        let parse = |s: Option<&str>| -> Result<f64> {
            let v: f64 = s
                .ok_or_else(|| Error::Parse(format!("line {}: missing field", lineno + 1)))?
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("line {}: non-finite value", lineno + 1)));
            }
            Ok(v)
        };
        out.push([parse(a)?, parse(b)?]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::ConstraintSense;

    #[test]
    fn grid_endpoints_and_total() {
        let g = GridSpec::new(vec![3, 2], vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(g.total_points(), 6);
        assert_eq!(g.point(0), vec![0.0, -1.0]);
        assert_eq!(g.point(5), vec![1.0, 1.0]);
        assert_eq!(g.point(2), vec![0.5, -1.0]);
    }

    #[test]
    fn grid_rejects_single_count() {
        assert!(GridSpec::new(vec![1], vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn grid_cap_enforced() {
        let g = GridSpec::new(vec![100, 100], vec![0.0; 2], vec![1.0; 2])
            .unwrap()
            .with_cap(100);
        assert_eq!(g.total_points(), 10_000);
        assert!(g.total_points() > 100);
    }

    #[test]
    fn enumeration_zero_binaries_is_one_lp() {
        let mut m = MilpModel::new();
        let x = m.add_var("x", 0.0, 2.0);
        m.set_objective(vec![(x, 1.0)]);
        let r = enumerate_milp_oracle(&m, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.stats.nodes, 1);
        assert!((r.objective.unwrap() - 0.0).abs() < 1e-9);
    }

    #[test]
    fn enumeration_two_binaries_is_four_lps() {
        let mut m = MilpModel::new();
        let x = m.add_var("x", -10.0, 10.0);
        let z1 = m.add_binary("z1");
        let z2 = m.add_binary("z2");
        m.add_constraint(vec![(x, 1.0), (z1, -3.0), (z2, -5.0)], ConstraintSense::Ge, -4.0);
        m.set_objective(vec![(x, 1.0)]);
        let r = enumerate_milp_oracle(&m, &SolverConfig::default()).unwrap();
        assert_eq!(r.stats.nodes, 4);
        assert!((r.objective.unwrap() + 4.0).abs() < 1e-8);
    }

    #[test]
    fn enumeration_rejects_too_many_binaries() {
        let mut m = MilpModel::new();
        for k in 0..17 {
            m.add_binary(format!("z{k}"));
        }
        m.set_objective(vec![]);
        assert!(matches!(
            enumerate_milp_oracle(&m, &SolverConfig::default()),
            Err(Error::ResourceExhausted(_))
        ));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let pts = vec![[0.5, -1.25], [3.0, 4.0]];
        let text = write_rbpua_csv(&pts);
        let back = parse_rbpua_csv(&text).unwrap();
        assert_eq!(back, pts);
        assert!(parse_rbpua_csv("px,py\n1.0\n").is_err());
        assert!(parse_rbpua_csv("a,b\n").is_err());
        assert!(parse_rbpua_csv("1.0,inf\n").is_err());
    }
}
