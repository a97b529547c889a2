//! Solver-facing model IR, a dense bounded-variable simplex, and a
//! branch-and-bound MILP solver. Nothing outside this module solves anything.

mod branch;
mod simplex;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Duration;

use crate::{Error, Result, DEFAULT_NODE_LIMIT, DELTA_GAP, EPS_FEAS, EPS_INT};

pub use branch::{solve_milp, solve_milp_hinted, IncumbentHint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    Le,
    Ge,
    Eq,
}

/// One linear constraint row over a sparse set of variables.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

/// Decision variables, linear rows, binary markers, and a MIN objective.
///
/// Variable bounds may be infinite in the IR, but `solve_milp` refuses models
/// where no constraint implies a finite range (see [`validate_bounded`]).
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    num_vars: usize,
    var_lo: Vec<f64>,
    var_hi: Vec<f64>,
    var_names: Vec<String>,
    pub constraints: Vec<Constraint>,
    binaries: BTreeSet<usize>,
    objective: Vec<(usize, f64)>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> usize {
        let idx = self.num_vars;
        self.num_vars += 1;
        self.var_lo.push(lo);
        self.var_hi.push(hi);
        self.var_names.push(name.into());
        idx
    }

    /// Adds a variable restricted to {0,1}.
    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        let idx = self.add_var(name, 0.0, 1.0);
        self.binaries.insert(idx);
        idx
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, sense: ConstraintSense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, f64)>) {
        self.objective = coeffs;
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.var_lo[var] = lo;
        self.var_hi[var] = hi;
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.var_lo[var], self.var_hi[var])
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.binaries.iter().copied()
    }

    pub fn num_binaries(&self) -> usize {
        self.binaries.len()
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn var_name(&self, var: usize) -> String {
        if self.var_names[var].is_empty() {
            format!("x{var}")
        } else {
            self.var_names[var].clone()
        }
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Signed violation of one row at `x` (positive means violated).
    pub fn row_violation(&self, c: &Constraint, x: &[f64]) -> f64 {
        let lhs: f64 = c.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
        match c.sense {
            ConstraintSense::Le => lhs - c.rhs,
            ConstraintSense::Ge => c.rhs - lhs,
            ConstraintSense::Eq => (lhs - c.rhs).abs(),
        }
    }

    /// Largest constraint violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| self.row_violation(c, x))
            .fold(0.0, f64::max)
    }

    fn check_well_formed(&self) -> Result<()> {
        for (j, (&lo, &hi)) in self.var_lo.iter().zip(&self.var_hi).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "variable {} has invalid bounds [{lo}, {hi}]",
                    self.var_name(j)
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() || c.coeffs.iter().any(|(j, v)| !v.is_finite() || *j >= self.num_vars) {
                return Err(Error::InvalidArgument("non-finite or out-of-range constraint row".into()));
            }
        }
        if self.objective.iter().any(|(j, v)| !v.is_finite() || *j >= self.num_vars) {
            return Err(Error::InvalidArgument("non-finite or out-of-range objective".into()));
        }
        for &b in &self.binaries {
            if self.var_lo[b] < -0.0 || self.var_hi[b] > 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "binary {} must have bounds within [0, 1]",
                    self.var_name(b)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Present iff status is Optimal.
    pub objective: Option<f64>,
    pub assignment: Vec<f64>,
    pub stats: SolveStats,
}

/// Tolerances and budgets shared by the LP and MILP solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub eps_feas: f64,
    pub eps_int: f64,
    pub delta_gap: f64,
    pub node_limit: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_feas: EPS_FEAS,
            eps_int: EPS_INT,
            delta_gap: DELTA_GAP,
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

/// Solves the continuous relaxation of `model` (binary markers ignored; the
/// [0,1] bounds on binaries still apply).
pub fn solve_lp(model: &MilpModel, cfg: &SolverConfig) -> Result<SolveResult> {
    model.check_well_formed()?;
    let start = std::time::Instant::now();
    let mut out = simplex::solve(model, cfg)?;
    out.stats.wall = start.elapsed();
    Ok(out)
}

/// Checks that every variable has a finite range, either directly in
/// `var_bounds` or implied by constraint rows (established by interval
/// propagation). Returns the offending variable otherwise.
pub fn validate_bounded(model: &MilpModel) -> Result<()> {
    let n = model.num_vars;
    let mut lo = model.var_lo.clone();
    let mut hi = model.var_hi.clone();
    for _pass in 0..30 {
        let mut changed = false;
        for c in &model.constraints {
            // Treat the row as one or two <= rows and derive per-variable
            // bounds from the interval sum of the remaining terms.
            let as_le: &[f64] = match c.sense {
                ConstraintSense::Le => &[1.0],
                ConstraintSense::Ge => &[-1.0],
                ConstraintSense::Eq => &[1.0, -1.0],
            };
            for &sign in as_le {
                let rhs = sign * c.rhs;
                // min of each term sign*a_j*x_j over its interval
                let mut finite_sum = 0.0;
                let mut inf_count = 0usize;
                let mut term_min = Vec::with_capacity(c.coeffs.len());
                for &(j, a) in &c.coeffs {
                    let a = sign * a;
                    let m = if a >= 0.0 { a * lo[j] } else { a * hi[j] };
                    term_min.push(m);
                    if m.is_finite() {
                        finite_sum += m;
                    } else {
                        inf_count += 1;
                    }
                }
                for (k, &(j, a)) in c.coeffs.iter().enumerate() {
                    let a = sign * a;
                    if a == 0.0 {
                        continue;
                    }
                    let mk = term_min[k];
                    let others = if mk.is_finite() {
                        if inf_count > 0 {
                            f64::NEG_INFINITY
                        } else {
                            finite_sum - mk
                        }
                    } else if inf_count > 1 {
                        f64::NEG_INFINITY
                    } else {
                        finite_sum
                    };
                    if !others.is_finite() {
                        continue;
                    }
                    let limit = (rhs - others) / a;
                    if a > 0.0 {
                        if limit < hi[j] - 1e-9 {
                            hi[j] = limit;
                            changed = true;
                        }
                    } else if limit > lo[j] + 1e-9 {
                        lo[j] = limit;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    for j in 0..n {
        if !lo[j].is_finite() || !hi[j].is_finite() {
            return Err(Error::Unbounded(format!(
                "variable {} has no finite bound ({:?}); bound it directly or through constraints",
                model.var_name(j),
                (lo[j], hi[j])
            )));
        }
    }
    Ok(())
}

/// Renders the model in LP text format for cross-checking against external
/// solvers. Output is deterministic for identical models.
pub fn write_lp_text(model: &MilpModel) -> String {
    let mut s = String::new();
    let term = |out: &mut String, coef: f64, name: String| {
        if coef >= 0.0 {
            let _ = write!(out, " + {coef} {name}");
        } else {
            let _ = write!(out, " - {} {name}", -coef);
        }
    };
    s.push_str("Minimize\n obj:");
    for &(j, c) in &model.objective {
        term(&mut s, c, model.var_name(j));
    }
    s.push_str("\nSubject To\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = write!(s, " c{i}:");
        for &(j, v) in &c.coeffs {
            term(&mut s, v, model.var_name(j));
        }
        let op = match c.sense {
            ConstraintSense::Le => "<=",
            ConstraintSense::Ge => ">=",
            ConstraintSense::Eq => "=",
        };
        let _ = writeln!(s, " {op} {}", c.rhs);
    }
    s.push_str("Bounds\n");
    for j in 0..model.num_vars {
        let (lo, hi) = (model.var_lo[j], model.var_hi[j]);
        let name = model.var_name(j);
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(s, " {name} free");
        } else if lo == f64::NEG_INFINITY {
            let _ = writeln!(s, " -inf <= {name} <= {hi}");
        } else if hi == f64::INFINITY {
            let _ = writeln!(s, " {lo} <= {name}");
        } else {
            let _ = writeln!(s, " {lo} <= {name} <= {hi}");
        }
    }
    if !model.binaries.is_empty() {
        s.push_str("Binaries\n");
        for &b in &model.binaries {
            let _ = writeln!(s, " {}", model.var_name(b));
        }
    }
    s.push_str("End\n");
    s
}
