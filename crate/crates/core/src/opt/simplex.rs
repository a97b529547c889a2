//! Bounded-variable primal simplex with a two-phase start.
//!
//! Nonbasic variables sit at a finite bound (or at zero when free). The basis
//! is kept in product form: a start factorization plus one eta vector per
//! pivot, refreshed periodically. Start bases coming from the triangular
//! crash peel in O(nnz); anything left over lands in a small dense LU bump.
//! Dantzig pricing with lowest-index tie-breaking; after a run of degenerate
//! pivots the solver switches to Bland's rule, which guarantees termination.

use std::collections::VecDeque;

use super::{ConstraintSense, MilpModel, SolveResult, SolveStats, SolveStatus, SolverConfig};
use crate::{Error, Result};

const DUAL_TOL: f64 = 1e-9;
const PIVOT_MIN: f64 = 1e-9;
const RATIO_SKIP: f64 = 1e-11;
const REFACTOR_EVERY: u64 = 64;
const STALL_LIMIT: u32 = 150;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Loc {
    Basic(usize),
    Lower,
    Upper,
    /// Nonbasic free variable parked at zero.
    FreeZero,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

/// Dense LU with partial pivoting, LAPACK-style ipiv semantics.
struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    ipiv: Vec<usize>,
}

impl DenseLu {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        let mut ipiv = vec![0usize; n];
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for r in k + 1..n {
                let v = a[r * n + k].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-11 {
                return Err(Error::Numerical("singular basis bump".into()));
            }
            ipiv[k] = piv;
            if piv != k {
                for c in 0..n {
                    a.swap(k * n + c, piv * n + c);
                }
            }
            let d = a[k * n + k];
            for r in k + 1..n {
                let f = a[r * n + k] / d;
                a[r * n + k] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        a[r * n + c] -= f * a[k * n + c];
                    }
                }
            }
        }
        Ok(Self { n, lu: a, ipiv })
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            rhs.swap(k, self.ipiv[k]);
        }
        for k in 0..n {
            let v = rhs[k];
            if v != 0.0 {
                for r in k + 1..n {
                    rhs[r] -= self.lu[r * n + k] * v;
                }
            }
        }
        for k in (0..n).rev() {
            let mut v = rhs[k];
            for c in k + 1..n {
                v -= self.lu[k * n + c] * rhs[c];
            }
            rhs[k] = v / self.lu[k * n + k];
        }
    }

    fn solve_transpose(&self, rhs: &mut [f64]) {
        let n = self.n;
        // U^T z = c (forward, diagonal from U) ...
        for k in 0..n {
            let mut v = rhs[k];
            for c in 0..k {
                v -= self.lu[c * n + k] * rhs[c];
            }
            rhs[k] = v / self.lu[k * n + k];
        }
        // ... then L^T w = z (backward, unit diagonal) ...
        for k in (0..n).rev() {
            let mut w = rhs[k];
            for r in k + 1..n {
                w -= self.lu[r * n + k] * rhs[r];
            }
            rhs[k] = w;
        }
        // ... and undo the row swaps.
        for k in (0..n).rev() {
            rhs.swap(k, self.ipiv[k]);
        }
    }
}

/// Start-basis factorization: a permuted-triangular peel over the basis
/// columns plus a dense LU of whatever would not triangularize. Later pivots
/// mutate the live basis array, so the factor carries its own snapshot of
/// which column sat in each slot.
struct Factor {
    /// Column index per slot at factorization time.
    snapshot: Vec<usize>,
    /// Resolution order: (row, basis slot, pivot value).
    peel: Vec<(usize, usize, f64)>,
    bump_rows: Vec<usize>,
    bump_slots: Vec<usize>,
    bump: Option<DenseLu>,
}

impl Factor {
    fn empty() -> Self {
        Self {
            snapshot: Vec::new(),
            peel: Vec::new(),
            bump_rows: Vec::new(),
            bump_slots: Vec::new(),
            bump: None,
        }
    }
}

struct Tableau {
    m: usize,
    n_struct: usize,
    crash: bool,
    /// Sparse columns over row indices; structural, then slack, then artificial.
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Value of each nonbasic column (stale for basic columns).
    val: Vec<f64>,
    loc: Vec<Loc>,
    basis: Vec<usize>,
    factor: Factor,
    /// Product-form updates since the last factorization: (pivot row, u).
    etas: Vec<(usize, Vec<f64>)>,
    xb: Vec<f64>,
    b: Vec<f64>,
    first_artificial: usize,
    iterations: u64,
    since_refactor: u64,
    bland: bool,
    degen_run: u32,
}

impl Tableau {
    fn build(model: &MilpModel, crash: bool) -> Self {
        let m = model.constraints.len();
        let n = model.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut lo: Vec<f64> = (0..n).map(|j| model.bounds(j).0).collect();
        let mut hi: Vec<f64> = (0..n).map(|j| model.bounds(j).1).collect();
        let mut b = Vec::with_capacity(m);
        for (i, c) in model.constraints.iter().enumerate() {
            for &(j, v) in &c.coeffs {
                if v != 0.0 {
                    cols[j].push((i, v));
                }
            }
            b.push(c.rhs);
        }
        // Slack columns: row sum + slack = rhs, slack sign bounds encode the sense.
        for c in model.constraints.iter() {
            match c.sense {
                ConstraintSense::Le => {
                    lo.push(0.0);
                    hi.push(f64::INFINITY);
                }
                ConstraintSense::Ge => {
                    lo.push(f64::NEG_INFINITY);
                    hi.push(0.0);
                }
                ConstraintSense::Eq => {
                    lo.push(0.0);
                    hi.push(0.0);
                }
            }
        }
        for i in 0..m {
            cols.push(vec![(i, 1.0)]);
        }
        let ncols = n + m;
        let mut val = vec![0.0; ncols];
        let mut loc = vec![Loc::Lower; ncols];
        for j in 0..ncols {
            if lo[j].is_finite() {
                loc[j] = Loc::Lower;
                val[j] = lo[j];
            } else if hi[j].is_finite() {
                loc[j] = Loc::Upper;
                val[j] = hi[j];
            } else {
                loc[j] = Loc::FreeZero;
                val[j] = 0.0;
            }
        }
        let mut t = Tableau {
            m,
            n_struct: n,
            crash,
            cols,
            lo,
            hi,
            val,
            loc,
            basis: Vec::new(),
            factor: Factor::empty(),
            etas: Vec::new(),
            xb: Vec::new(),
            b,
            first_artificial: ncols,
            iterations: 0,
            since_refactor: 0,
            bland: false,
            degen_run: 0,
        };
        t.install_start_basis(model);
        t
    }

    /// Builds the initial basis. A triangular crash pass walks the rows in
    /// order and lets each row designate one still-free variable whose value
    /// is set to satisfy the row; models built from definitional equality
    /// chains (variable = affine image of earlier variables) start feasible
    /// or nearly so, leaving few rows to the artificials.
    fn install_start_basis(&mut self, model: &MilpModel) {
        let m = self.m;
        let n = self.n_struct;
        let mut designated: Vec<Option<usize>> = vec![None; m];
        if self.crash {
            let mut is_designated = vec![false; n];
            for (i, c) in model.constraints.iter().enumerate() {
                let act: f64 = c.coeffs.iter().map(|&(j, a)| a * self.val[j]).sum();
                let resid = c.rhs - act;
                let slack_ok = match c.sense {
                    ConstraintSense::Le => resid >= -1e-12,
                    ConstraintSense::Ge => resid <= 1e-12,
                    ConstraintSense::Eq => resid.abs() <= 1e-12,
                };
                if slack_ok {
                    continue;
                }
                for &(j, a) in &c.coeffs {
                    if is_designated[j] || a.abs() < 0.25 {
                        continue;
                    }
                    let target = self.val[j] + resid / a;
                    if target >= self.lo[j] - 1e-9 && target <= self.hi[j] + 1e-9 {
                        self.val[j] = target.clamp(self.lo[j], self.hi[j]);
                        is_designated[j] = true;
                        designated[i] = Some(j);
                        break;
                    }
                }
            }
        }
        // Final residuals with the crash values in place; slack where its
        // bounds admit the value, artificial otherwise.
        let mut resid = self.b.clone();
        for j in 0..n {
            let v = self.val[j];
            if v != 0.0 {
                for &(r, a) in &self.cols[j] {
                    resid[r] -= a * v;
                }
            }
        }
        self.basis = vec![usize::MAX; m];
        for i in 0..m {
            if let Some(j) = designated[i] {
                self.basis[i] = j;
                self.loc[j] = Loc::Basic(i);
                continue;
            }
            let s = n + i;
            let r = resid[i];
            if r >= self.lo[s] - 1e-12 && r <= self.hi[s] + 1e-12 {
                self.basis[i] = s;
                self.loc[s] = Loc::Basic(i);
            } else {
                let sign = if r >= 0.0 { 1.0 } else { -1.0 };
                let a = self.cols.len();
                self.cols.push(vec![(i, sign)]);
                self.lo.push(0.0);
                self.hi.push(f64::INFINITY);
                self.val.push(0.0);
                self.loc.push(Loc::Basic(i));
                self.basis[i] = a;
            }
        }
        self.first_artificial = self.n_struct + m;
    }

    fn has_artificials(&self) -> bool {
        self.cols.len() > self.first_artificial
    }

    /// Factorizes the current basis from scratch, drops the etas, and
    /// recomputes basic values.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        self.etas.clear();
        if m == 0 {
            self.factor = Factor::empty();
            self.xb.clear();
            self.since_refactor = 0;
            return Ok(());
        }
        // Row-singleton peel: repeatedly resolve a row whose remaining basic
        // columns reduce to one, in deterministic ascending-row order.
        let mut row_cnt = vec![0usize; m];
        let mut row_sum = vec![0usize; m];
        for (slot, &j) in self.basis.iter().enumerate() {
            for &(r, _) in &self.cols[j] {
                row_cnt[r] += 1;
                row_sum[r] += slot;
            }
        }
        let mut queue: VecDeque<usize> = (0..m).filter(|&r| row_cnt[r] == 1).collect();
        let mut row_done = vec![false; m];
        let mut slot_done = vec![false; m];
        let mut peel = Vec::with_capacity(m);
        while let Some(r) = queue.pop_front() {
            if row_done[r] || row_cnt[r] != 1 {
                continue;
            }
            let slot = row_sum[r];
            if slot_done[slot] {
                continue;
            }
            let col = &self.cols[self.basis[slot]];
            let pivot = col
                .iter()
                .find(|&&(rr, _)| rr == r)
                .map(|&(_, v)| v)
                .unwrap_or(0.0);
            if pivot.abs() < 1e-11 {
                // Too small to anchor the triangle; leave the row to the bump.
                continue;
            }
            row_done[r] = true;
            slot_done[slot] = true;
            peel.push((r, slot, pivot));
            for &(r2, _) in col {
                if !row_done[r2] {
                    row_cnt[r2] -= 1;
                    row_sum[r2] -= slot;
                    if row_cnt[r2] == 1 {
                        queue.push_back(r2);
                    }
                }
            }
        }
        let bump_rows: Vec<usize> = (0..m).filter(|&r| !row_done[r]).collect();
        let bump_slots: Vec<usize> = (0..m).filter(|&s| !slot_done[s]).collect();
        debug_assert_eq!(bump_rows.len(), bump_slots.len());
        let bump = if bump_rows.is_empty() {
            None
        } else {
            let bn = bump_rows.len();
            let mut row_index = vec![usize::MAX; m];
            for (bi, &r) in bump_rows.iter().enumerate() {
                row_index[r] = bi;
            }
            let mut mat = vec![0.0; bn * bn];
            for (bj, &slot) in bump_slots.iter().enumerate() {
                for &(r, v) in &self.cols[self.basis[slot]] {
                    let bi = row_index[r];
                    if bi != usize::MAX {
                        mat[bi * bn + bj] = v;
                    }
                }
            }
            Some(DenseLu::factor(mat, bn)?)
        };
        self.factor = Factor {
            snapshot: self.basis.clone(),
            peel,
            bump_rows,
            bump_slots,
            bump,
        };
        self.recompute_basics();
        self.since_refactor = 0;
        Ok(())
    }

    /// Solves `B x = v` with the start factorization only (no etas).
    /// `v` is consumed as scratch; the result is indexed by basis slot.
    fn start_solve(&self, v: &mut [f64]) -> Vec<f64> {
        let m = self.m;
        let mut x = vec![0.0; m];
        for &(r, slot, pivot) in &self.factor.peel {
            let t = v[r] / pivot;
            x[slot] = t;
            if t != 0.0 {
                for &(r2, a) in &self.cols[self.factor.snapshot[slot]] {
                    v[r2] -= a * t;
                }
            }
        }
        if let Some(lu) = &self.factor.bump {
            let mut rhs: Vec<f64> =
                self.factor.bump_rows.iter().map(|&r| v[r]).collect();
            lu.solve(&mut rhs);
            for (bj, &slot) in self.factor.bump_slots.iter().enumerate() {
                x[slot] = rhs[bj];
            }
        }
        x
    }

    /// Solves `B^T y = c` with the start factorization only.
    fn start_solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        if let Some(lu) = &self.factor.bump {
            let mut rhs: Vec<f64> =
                self.factor.bump_slots.iter().map(|&s| c[s]).collect();
            lu.solve_transpose(&mut rhs);
            for (bi, &r) in self.factor.bump_rows.iter().enumerate() {
                y[r] = rhs[bi];
            }
        }
        for &(r, slot, pivot) in self.factor.peel.iter().rev() {
            let mut acc = c[slot];
            for &(r2, a) in &self.cols[self.factor.snapshot[slot]] {
                if r2 != r {
                    acc -= a * y[r2];
                }
            }
            y[r] = acc / pivot;
        }
        y
    }

    /// `B^{-1} v` for a dense right-hand side (consumed as scratch).
    fn ftran_dense(&self, v: &mut [f64]) -> Vec<f64> {
        let mut x = self.start_solve(v);
        for (r, u) in &self.etas {
            let t = x[*r] / u[*r];
            if t != 0.0 {
                for (xi, ui) in x.iter_mut().zip(u) {
                    *xi -= ui * t;
                }
                x[*r] = t;
            } else {
                x[*r] = 0.0;
            }
        }
        x
    }

    /// `B^{-1} a_j` for a sparse column.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        for &(row, a) in &self.cols[j] {
            v[row] += a;
        }
        self.ftran_dense(&mut v)
    }

    /// Simplex multipliers `y = c_B B^{-1}` for the given cost vector:
    /// apply the eta transposes newest-first, then the start factorization.
    fn multipliers(&self, costs: &[f64]) -> Vec<f64> {
        let mut c: Vec<f64> = self.basis.iter().map(|&j| costs[j]).collect();
        for (r, u) in self.etas.iter().rev() {
            let s: f64 = u.iter().zip(&c).map(|(a, b)| a * b).sum();
            c[*r] = (c[*r] - (s - u[*r] * c[*r])) / u[*r];
        }
        self.start_solve_transpose(&c)
    }

    fn recompute_basics(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.cols.len() {
            if matches!(self.loc[j], Loc::Basic(_)) {
                continue;
            }
            let v = self.val[j];
            if v != 0.0 {
                for &(r, a) in &self.cols[j] {
                    rhs[r] -= a * v;
                }
            }
        }
        self.xb = self.ftran_dense(&mut rhs);
    }

    fn reduced_cost(&self, j: usize, costs: &[f64], y: &[f64]) -> f64 {
        let mut d = costs[j];
        for &(r, v) in &self.cols[j] {
            d -= y[r] * v;
        }
        d
    }

    fn choose_entering(&self, costs: &[f64], y: &[f64]) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        let mut best_score = DUAL_TOL;
        for j in 0..self.cols.len() {
            if matches!(self.loc[j], Loc::Basic(_)) {
                continue;
            }
            if self.hi[j] - self.lo[j] <= 0.0 {
                continue; // fixed variable can never move
            }
            let d = self.reduced_cost(j, costs, y);
            let (eligible, sigma, score) = match self.loc[j] {
                Loc::Lower => (d < -DUAL_TOL, 1.0, -d),
                Loc::Upper => (d > DUAL_TOL, -1.0, d),
                Loc::FreeZero => {
                    if d < -DUAL_TOL {
                        (true, 1.0, -d)
                    } else {
                        (d > DUAL_TOL, -1.0, d)
                    }
                }
                Loc::Basic(_) => unreachable!(),
            };
            if !eligible {
                continue;
            }
            if self.bland {
                return Some((j, sigma, d));
            }
            if score > best_score {
                best_score = score;
                best = Some((j, sigma, d));
            }
        }
        best
    }

    /// Blocking candidates for the ratio test: (row, cap, |pivot|).
    fn blocking_rows(&self, sigma: f64, u: &[f64]) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for r in 0..self.m {
            let dir = -sigma * u[r]; // rate of change of xb[r]
            let bv = self.basis[r];
            let cap = if dir > RATIO_SKIP {
                if self.hi[bv].is_finite() {
                    ((self.hi[bv] - self.xb[r]) / dir).max(0.0)
                } else {
                    continue;
                }
            } else if dir < -RATIO_SKIP {
                if self.lo[bv].is_finite() {
                    ((self.lo[bv] - self.xb[r]) / dir).max(0.0)
                } else {
                    continue;
                }
            } else {
                continue;
            };
            out.push((r, cap, u[r].abs()));
        }
        out
    }

    /// One phase of the simplex with the given costs.
    fn run_phase(&mut self, costs: &[f64], iter_limit: u64) -> Result<PhaseEnd> {
        let mut retried_tiny_pivot = false;
        loop {
            if self.iterations > iter_limit {
                return Err(Error::Numerical(format!(
                    "simplex iteration limit {iter_limit} exceeded"
                )));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.multipliers(costs);
            let Some((enter, sigma, _d)) = self.choose_entering(costs, &y) else {
                return Ok(PhaseEnd::Optimal);
            };
            let u = self.ftran(enter);

            let flip_cap = if self.hi[enter].is_finite() && self.lo[enter].is_finite() {
                self.hi[enter] - self.lo[enter]
            } else {
                f64::INFINITY
            };
            let candidates = self.blocking_rows(sigma, &u);
            let t_rows = candidates
                .iter()
                .map(|&(_, cap, _)| cap)
                .fold(f64::INFINITY, f64::min);

            if flip_cap.is_infinite() && t_rows.is_infinite() {
                return Ok(PhaseEnd::Unbounded);
            }

            if flip_cap <= t_rows {
                self.iterations += 1;
                self.degen_run = 0; // flips move by hi-lo > 0
                self.apply_flip(enter, sigma, flip_cap, &u);
                continue;
            }

            // Leaving row: among candidates within a hair of the minimum
            // ratio, prefer the largest pivot (Bland mode: lowest variable
            // index), ties broken by lowest variable index.
            let tie = t_rows + 1e-9 * (1.0 + t_rows.abs());
            let mut leave: Option<(usize, f64)> = None;
            let mut leave_key = (0.0f64, usize::MAX);
            for &(r, cap, piv) in &candidates {
                if cap > tie {
                    continue;
                }
                let bv = self.basis[r];
                let better = if self.bland {
                    leave.is_none() || bv < leave_key.1
                } else {
                    leave.is_none() || piv > leave_key.0 || (piv == leave_key.0 && bv < leave_key.1)
                };
                if better {
                    leave = Some((r, piv));
                    leave_key = (piv, bv);
                }
            }
            let (r_out, piv) = leave.expect("finite ratio implies a blocking row");

            if piv < PIVOT_MIN && !retried_tiny_pivot {
                // Possibly stale arithmetic; rebuild and re-evaluate once.
                retried_tiny_pivot = true;
                self.refactor()?;
                continue;
            }
            retried_tiny_pivot = false;

            self.iterations += 1;
            self.since_refactor += 1;
            if t_rows <= 1e-12 {
                self.degen_run += 1;
                if self.degen_run > STALL_LIMIT {
                    self.bland = true;
                }
            } else {
                self.degen_run = 0;
            }
            self.apply_pivot(enter, sigma, t_rows, r_out, &u)?;
        }
    }

    fn apply_flip(&mut self, enter: usize, sigma: f64, t: f64, u: &[f64]) {
        for r in 0..self.m {
            self.xb[r] -= sigma * t * u[r];
        }
        // Snap to the exact bound to avoid drift.
        self.val[enter] = if sigma > 0.0 { self.hi[enter] } else { self.lo[enter] };
        self.loc[enter] = if sigma > 0.0 { Loc::Upper } else { Loc::Lower };
    }

    fn apply_pivot(
        &mut self,
        enter: usize,
        sigma: f64,
        t: f64,
        r_out: usize,
        u: &[f64],
    ) -> Result<()> {
        let piv = u[r_out];
        if piv.abs() < RATIO_SKIP {
            return Err(Error::Numerical("pivot element vanished".into()));
        }
        let leaving = self.basis[r_out];
        let enter_val = self.val[enter] + sigma * t;
        for r in 0..self.m {
            if r != r_out {
                self.xb[r] -= sigma * t * u[r];
            }
        }
        // Leaving variable lands on the bound it hit.
        let dir = -sigma * piv;
        let (leave_loc, leave_val) = if dir > 0.0 {
            (Loc::Upper, self.hi[leaving])
        } else {
            (Loc::Lower, self.lo[leaving])
        };
        self.loc[leaving] = leave_loc;
        self.val[leaving] = leave_val;
        self.basis[r_out] = enter;
        self.loc[enter] = Loc::Basic(r_out);
        self.xb[r_out] = enter_val;
        self.etas.push((r_out, u.to_vec()));
        Ok(())
    }

    /// The two-phase scheme assumes every basic variable starts inside its
    /// bounds (infeasibility lives only in the artificials). A crash basis
    /// whose designation cascade broke can violate that; detect it here.
    fn basics_in_bounds(&self, tol: f64) -> bool {
        (0..self.m).all(|r| {
            let j = self.basis[r];
            self.xb[r] >= self.lo[j] - tol && self.xb[r] <= self.hi[j] + tol
        })
    }

    fn phase1_infeasibility(&self) -> f64 {
        let mut total = 0.0;
        for j in self.first_artificial..self.cols.len() {
            let v = match self.loc[j] {
                Loc::Basic(r) => self.xb[r],
                _ => self.val[j],
            };
            total += v.max(0.0);
        }
        total
    }

    fn value_of(&self, j: usize) -> f64 {
        match self.loc[j] {
            Loc::Basic(r) => self.xb[r],
            _ => self.val[j],
        }
    }
}

pub(super) fn solve(model: &MilpModel, cfg: &SolverConfig) -> Result<SolveResult> {
    let mut t = Tableau::build(model, true);
    let crash_ok = t.refactor().is_ok() && t.basics_in_bounds(1e-9);
    if !crash_ok {
        // Dependent basis or a broken designation cascade; restart from the
        // plain slack/artificial basis, which is diagonal and always valid.
        t = Tableau::build(model, false);
        t.refactor()?;
    }
    let iter_limit = 20_000 + 50 * (t.m as u64 + t.cols.len() as u64);

    if t.has_artificials() {
        let mut costs = vec![0.0; t.cols.len()];
        for c in costs.iter_mut().skip(t.first_artificial) {
            *c = 1.0;
        }
        match t.run_phase(&costs, iter_limit)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                return Err(Error::Numerical("phase 1 reported unbounded".into()))
            }
        }
        let bmax = t.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if t.phase1_infeasibility() > cfg.eps_feas * (1.0 + bmax) {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                objective: None,
                assignment: Vec::new(),
                stats: SolveStats {
                    nodes: 0,
                    lp_iterations: t.iterations,
                    wall: Default::default(),
                },
            });
        }
        // Freeze artificials at zero for phase 2.
        for j in t.first_artificial..t.cols.len() {
            t.lo[j] = 0.0;
            t.hi[j] = 0.0;
            if !matches!(t.loc[j], Loc::Basic(_)) {
                t.val[j] = 0.0;
                t.loc[j] = Loc::Lower;
            }
        }
        t.bland = false;
        t.degen_run = 0;
    }

    let mut costs = vec![0.0; t.cols.len()];
    for &(j, c) in model.objective() {
        costs[j] += c;
    }
    let end = t.run_phase(&costs, iter_limit)?;
    match end {
        PhaseEnd::Unbounded => Ok(SolveResult {
            status: SolveStatus::Unbounded,
            objective: None,
            assignment: Vec::new(),
            stats: SolveStats {
                nodes: 0,
                lp_iterations: t.iterations,
                wall: Default::default(),
            },
        }),
        PhaseEnd::Optimal => {
            // Clean pass: rebuild the factorization and basic values before
            // reading the solution off the tableau. Skip when only a handful
            // of pivots happened since the last rebuild; drift is negligible.
            if t.since_refactor > 24 {
                t.refactor()?;
            }
            let x: Vec<f64> = (0..model.num_vars()).map(|j| t.value_of(j)).collect();
            let objective = model.objective_at(&x);
            Ok(SolveResult {
                status: SolveStatus::Optimal,
                objective: Some(objective),
                assignment: x,
                stats: SolveStats {
                    nodes: 0,
                    lp_iterations: t.iterations,
                    wall: Default::default(),
                },
            })
        }
    }
}
