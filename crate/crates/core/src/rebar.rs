//! Backprojection over-approximation, the offline containment check, the
//! online LP check under measurement uncertainty, and the parallel
//! multi-agent driver.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::PairSystem;
use crate::linalg::Matrix;
use crate::lingeo::{self, HalfSpace, IntervalBox, Polytope, Sense};
use crate::opt::{
    solve_lp, solve_milp_hinted, ConstraintSense, MilpModel, SolveStatus, SolverConfig,
};
use crate::{log_info, log_warn, Error, Result};

/// Solve effort spent on one backprojection step.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub facets_requested: usize,
    pub facets_kept: usize,
    pub facets_dropped: usize,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_ms: f64,
}

/// Backprojection polytopes walking backward from the collision set:
/// `steps[0]` is the collision set itself and `steps[k]` over-approximates
/// the states k steps from entering it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbpoaSequence {
    pub steps: Vec<Polytope>,
    pub facet_count: usize,
    pub step_stats: Vec<StepStats>,
}

/// One-step relative backprojection over-approximation of `target`.
///
/// Per facet direction: build the facet MILP and take the optimal value as
/// the supporting offset. An infeasible facet means no state maps into the
/// target at all, so the result is the empty set. A facet that exhausts the
/// node budget is dropped, which only widens the result.
pub fn compute_rbpoa(
    pair: &PairSystem,
    target: &Polytope,
    n_f: usize,
    cfg: &SolverConfig,
) -> Result<(Polytope, StepStats)> {
    let start = Instant::now();
    let mut stats = StepStats {
        facets_requested: n_f,
        ..Default::default()
    };
    let directions = lingeo::facet_directions(n_f)?;
    if target.is_empty_marker() {
        stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        return Ok((Polytope::empty(2), stats));
    }
    let mut halfspaces = Vec::with_capacity(n_f);
    for a in &directions {
        let (model, layout) = match crate::encoder::build_facet_milp(pair, target, a) {
            Ok(built) => built,
            Err(Error::EmptyTarget) => {
                stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
                return Ok((Polytope::empty(2), stats));
            }
            Err(e) => return Err(e),
        };
        let hint = crate::encoder::propagation_hint(pair, &layout)?;
        match solve_milp_hinted(&model, cfg, Some(&hint)) {
            Ok(r) => {
                stats.nodes += r.stats.nodes;
                stats.lp_iterations += r.stats.lp_iterations;
                match r.status {
                    SolveStatus::Optimal => {
                        let b = r.objective.expect("optimal has objective");
                        halfspaces.push(HalfSpace::ge(a.to_vec(), b));
                        stats.facets_kept += 1;
                    }
                    SolveStatus::Infeasible => {
                        // The feasible region does not depend on the facet:
                        // the whole backprojection set is empty.
                        stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
                        return Ok((Polytope::empty(2), stats));
                    }
                    SolveStatus::Unbounded => {
                        // Cannot happen with a bounded workspace; dropping the
                        // facet keeps the superset sound.
                        log_warn!("facet ({:.3},{:.3}) unbounded; dropped", a[0], a[1]);
                        stats.facets_dropped += 1;
                    }
                }
            }
            Err(Error::ResourceExhausted(msg)) => {
                log_warn!(
                    "facet ({:.3},{:.3}) dropped after hitting limits: {msg}",
                    a[0],
                    a[1]
                );
                stats.facets_dropped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let poly = Polytope::from_halfspaces(2, halfspaces)?;
    Ok((poly, stats))
}

/// Backprojection sequence over a horizon: `steps[0]` is the collision set
/// and each further step backprojects the previous one. Once a step comes
/// back empty every remaining step is empty as well.
pub fn compute_rbpoa_sequence(
    pair: &PairSystem,
    tau: usize,
    n_f: usize,
    cfg: &SolverConfig,
) -> Result<RbpoaSequence> {
    if tau < 1 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut steps = Vec::with_capacity(tau + 1);
    let mut step_stats = Vec::with_capacity(tau);
    steps.push(pair.collision_set.clone());
    for k in 1..=tau {
        if steps[k - 1].is_empty_marker() {
            steps.push(Polytope::empty(2));
            step_stats.push(StepStats::default());
            continue;
        }
        let (poly, stats) = compute_rbpoa(pair, &steps[k - 1], n_f, cfg)?;
        log_info!(
            "backprojection step {k}: {} facets kept, {} dropped, {} nodes",
            stats.facets_kept,
            stats.facets_dropped,
            stats.nodes
        );
        steps.push(poly);
        step_stats.push(stats);
    }
    Ok(RbpoaSequence {
        steps,
        facet_count: n_f,
        step_stats,
    })
}

/// The pair is verified safe when the one-step backprojection of the
/// collision set cannot leave the collision set: non-colliding relative
/// positions then never transition into collision.
pub fn check_verified_safe(
    rbpoa: &Polytope,
    collision_set: &Polytope,
    relpos_box: &IntervalBox,
) -> Result<bool> {
    lingeo::polytope_subset(rbpoa, collision_set, relpos_box)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OnlineVerdict {
    /// Every feasibility LP was infeasible: no state consistent with the
    /// measurement can be inside any backprojection step.
    Safe,
    /// Some LP was feasible. The over-approximation may alarm spuriously,
    /// but a safe verdict is never wrong.
    Unknown,
}

/// The geometry needed by the online check: workspace boxes and position
/// extraction, no controllers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairGeometry {
    pub state_box_i: IntervalBox,
    pub state_box_j: IntervalBox,
    pub pos_select_i: Matrix,
    pub pos_select_j: Matrix,
}

impl PairGeometry {
    pub fn of(pair: &PairSystem) -> Self {
        Self {
            state_box_i: pair.agent_i.state_box.clone(),
            state_box_j: pair.agent_j.state_box.clone(),
            pos_select_i: pair.agent_i.pos_select.clone(),
            pos_select_j: pair.agent_j.pos_select.clone(),
        }
    }

    /// Shape checks for geometry read from untrusted report files.
    pub fn validate(&self) -> Result<()> {
        for (sel, boxx, tag) in [
            (&self.pos_select_i, &self.state_box_i, "i"),
            (&self.pos_select_j, &self.state_box_j, "j"),
        ] {
            if sel.rows() != 2 {
                return Err(Error::Dimension(format!(
                    "pos_select_{tag} must have 2 rows, has {}",
                    sel.rows()
                )));
            }
            if sel.cols() != boxx.dim() {
                return Err(Error::Dimension(format!(
                    "pos_select_{tag} has {} columns, state box has dim {}",
                    sel.cols(),
                    boxx.dim()
                )));
            }
        }
        Ok(())
    }
}

/// Online safety check under measurement uncertainty. For each step polytope
/// solve the feasibility LP over: workspace state, relative-position
/// extraction, the uncertainty rows, and membership in the step. All
/// infeasible means the system cannot enter the collision set over the
/// covered horizon.
pub fn online_check(
    geom: &PairGeometry,
    rbpoa_steps: &[Polytope],
    uncertainty: &Polytope,
) -> Result<OnlineVerdict> {
    if rbpoa_steps.is_empty() {
        return Err(Error::InvalidArgument(
            "online check needs at least one backprojection step".into(),
        ));
    }
    if uncertainty.dim != 2 {
        return Err(Error::Dimension("uncertainty polytope must be planar".into()));
    }
    geom.validate()?;
    uncertainty.validate()?;
    if uncertainty.is_empty_marker() {
        return Ok(OnlineVerdict::Safe);
    }
    let cfg = SolverConfig::default();
    let ni = geom.state_box_i.dim();
    let nj = geom.state_box_j.dim();
    for step in rbpoa_steps {
        if step.dim != 2 {
            return Err(Error::Dimension("backprojection step must be planar".into()));
        }
        if step.is_empty_marker() {
            continue;
        }
        let mut m = MilpModel::new();
        for d in 0..ni {
            m.add_var(format!("xi{d}"), geom.state_box_i.lower[d], geom.state_box_i.upper[d]);
        }
        for d in 0..nj {
            m.add_var(format!("xj{d}"), geom.state_box_j.lower[d], geom.state_box_j.upper[d]);
        }
        let p0 = m.num_vars();
        for d in 0..2 {
            m.add_var(format!("p{d}"), f64::NEG_INFINITY, f64::INFINITY);
        }
        for d in 0..2 {
            let mut coeffs = vec![(p0 + d, 1.0)];
            for c in 0..nj {
                let w = geom.pos_select_j.get(d, c);
                if w != 0.0 {
                    coeffs.push((ni + c, -w));
                }
            }
            for c in 0..ni {
                let w = geom.pos_select_i.get(d, c);
                if w != 0.0 {
                    coeffs.push((c, w));
                }
            }
            m.add_constraint(coeffs, ConstraintSense::Eq, 0.0);
        }
        let add_poly = |m: &mut MilpModel, poly: &Polytope| {
            for h in &poly.halfspaces {
                let coeffs: Vec<(usize, f64)> = h
                    .normal
                    .iter()
                    .enumerate()
                    .map(|(d, &v)| (p0 + d, v))
                    .collect();
                let sense = match h.sense {
                    Sense::Ge => ConstraintSense::Ge,
                    Sense::Le => ConstraintSense::Le,
                };
                m.add_constraint(coeffs, sense, h.offset);
            }
        };
        add_poly(&mut m, uncertainty);
        add_poly(&mut m, step);
        m.set_objective(Vec::new());
        let r = solve_lp(&m, &cfg)?;
        match r.status {
            SolveStatus::Infeasible => {}
            _ => return Ok(OnlineVerdict::Unknown),
        }
    }
    Ok(OnlineVerdict::Safe)
}

/// Convenience wrapper taking the full pair system.
pub fn online_check_pair(
    pair: &PairSystem,
    rbpoa_steps: &[Polytope],
    uncertainty: &Polytope,
) -> Result<OnlineVerdict> {
    online_check(&PairGeometry::of(pair), rbpoa_steps, uncertainty)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "VERIFIED_SAFE")]
    VerifiedSafe,
    #[serde(rename = "NOT_VERIFIED")]
    NotVerified,
}

/// Per-pair outcome, self-contained so the online check can run from the
/// report alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    pub contained: bool,
    pub error: Option<String>,
    pub wall_ms: f64,
    pub rbpoa: Option<RbpoaSequence>,
    pub geometry: Option<PairGeometry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SafetyReport {
    pub n_agents: usize,
    pub verdict: Verdict,
    pub pairs: Vec<PairReport>,
    pub total_wall_ms: f64,
    /// Standing assumptions under which the verdict holds.
    pub assumptions: Vec<String>,
}

impl SafetyReport {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let r: SafetyReport =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("report: {e}")))?;
        for p in &r.pairs {
            if let Some(seq) = &p.rbpoa {
                for step in &seq.steps {
                    step.validate()?;
                    if step.dim != 2 {
                        return Err(Error::Dimension(
                            "backprojection steps must be planar".into(),
                        ));
                    }
                }
            }
            if let Some(geom) = &p.geometry {
                geom.validate()?;
            }
        }
        Ok(r)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&PairReport> {
        self.pairs
            .iter()
            .find(|p| (p.i, p.j) == (i, j) || (p.i, p.j) == (j, i))
    }
}

/// One pairwise verification job.
#[derive(Debug, Clone)]
pub struct PairJob {
    pub i: usize,
    pub j: usize,
    pub system: PairSystem,
}

/// All agents plus one job per unordered pair.
#[derive(Debug, Clone)]
pub struct MultiAgentSystem {
    pub n_agents: usize,
    pub pairs: Vec<PairJob>,
}

impl MultiAgentSystem {
    fn validate(&self) -> Result<()> {
        let n = self.n_agents;
        if n == 0 {
            return Err(Error::Scenario("system needs at least one agent".into()));
        }
        let expected = n * n.saturating_sub(1) / 2;
        if self.pairs.len() != expected {
            return Err(Error::Scenario(format!(
                "{n} agents need {expected} pairs, got {}",
                self.pairs.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for job in &self.pairs {
            if job.i >= job.j || job.j >= n {
                return Err(Error::Scenario(format!(
                    "pair ({}, {}) is not an ordered pair below {n}",
                    job.i, job.j
                )));
            }
            if !seen.insert((job.i, job.j)) {
                return Err(Error::Scenario(format!(
                    "pair ({}, {}) appears twice",
                    job.i, job.j
                )));
            }
        }
        Ok(())
    }
}

const WORKSPACE_ASSUMPTION: &str = "states remain inside the declared workspace boxes at all \
     times; the verdict covers trajectories while they stay within them";

fn run_pair_job(job: &PairJob, tau: usize, n_f: usize, cfg: &SolverConfig) -> PairReport {
    let start = Instant::now();
    let outcome = compute_rbpoa_sequence(&job.system, tau, n_f, cfg).and_then(|seq| {
        let relbox = job.system.relpos_box()?;
        let contained = check_verified_safe(&seq.steps[1], &job.system.collision_set, &relbox)?;
        Ok((seq, contained))
    });
    match outcome {
        Ok((seq, contained)) => PairReport {
            i: job.i,
            j: job.j,
            contained,
            error: None,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            rbpoa: Some(seq),
            geometry: Some(PairGeometry::of(&job.system)),
        },
        Err(e) => PairReport {
            i: job.i,
            j: job.j,
            contained: false,
            error: Some(e.to_string()),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            rbpoa: None,
            geometry: Some(PairGeometry::of(&job.system)),
        },
    }
}

/// Runs every pairwise job across `workers` threads and aggregates: the
/// system is verified safe exactly when every pair's backprojection is
/// contained in its collision set. Results are keyed by pair, so the verdict
/// does not depend on scheduling order.
pub fn verify_multiagent(
    system: &MultiAgentSystem,
    tau: usize,
    n_f: usize,
    workers: usize,
    cfg: &SolverConfig,
) -> Result<SafetyReport> {
    system.validate()?;
    let start = Instant::now();
    let workers = workers.max(1);
    let n_jobs = system.pairs.len();
    let slots: Mutex<Vec<Option<PairReport>>> = Mutex::new(vec![None; n_jobs]);
    let next_job = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers.min(n_jobs.max(1)) {
            scope.spawn(|| loop {
                let idx = next_job.fetch_add(1, Ordering::Relaxed);
                if idx >= n_jobs {
                    break;
                }
                let report = run_pair_job(&system.pairs[idx], tau, n_f, cfg);
                slots.lock().expect("result mutex").as_mut_slice()[idx] = Some(report);
            });
        }
    });

    let pairs: Vec<PairReport> = slots
        .into_inner()
        .expect("result mutex")
        .into_iter()
        .map(|p| p.expect("every job ran"))
        .collect();
    let all_contained = pairs.iter().all(|p| p.contained && p.error.is_none());
    Ok(SafetyReport {
        n_agents: system.n_agents,
        verdict: if all_contained {
            Verdict::VerifiedSafe
        } else {
            Verdict::NotVerified
        },
        pairs,
        total_wall_ms: start.elapsed().as_secs_f64() * 1e3,
        assumptions: vec![WORKSPACE_ASSUMPTION.to_string()],
    })
}
