//! Shared helpers for the integration and acceptance suites: deterministic
//! random models, hand-constructed pair systems with known behavior, and
//! independent brute-force oracles.
#![allow(dead_code)]
// The reference oracles below use index loops on purpose: they mirror the
// textbook arithmetic rather than the library idioms they are checking.
#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rebar_core::dynamics::{
    double_integrator, single_integrator, AgentModel, ObsMap, PairSystem,
};
use rebar_core::linalg::Matrix;
use rebar_core::lingeo::{HalfSpace, IntervalBox, Polytope};
use rebar_core::network::{Activation, Layer, ReluNetwork};
use rebar_core::opt::{
    ConstraintSense, MilpModel, SolveStatus, SolverConfig,
};
use rebar_core::oracle::GridSpec;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Random models
// ---------------------------------------------------------------------------

/// Random network with the given layer sizes; hidden layers ReLU, final
/// linear. Weights scale like 1/sqrt(fan_in) so activations stay moderate.
pub fn random_net(r: &mut ChaCha8Rng, dims: &[usize], gain: f64) -> ReluNetwork {
    assert!(dims.len() >= 2);
    let mut layers = Vec::new();
    for w in dims.windows(2) {
        let (n_in, n_out) = (w[0], w[1]);
        let scale = gain / (n_in as f64).sqrt();
        let weights = Matrix::from_rows(
            &(0..n_out)
                .map(|_| (0..n_in).map(|_| r.random_range(-scale..scale)).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let bias = (0..n_out).map(|_| r.random_range(-0.2..0.2)).collect();
        layers.push(Layer { weights, bias, activation: Activation::Relu });
    }
    layers.last_mut().unwrap().activation = Activation::Linear;
    ReluNetwork { layers }
}

pub fn zero_net(n_in: usize, n_out: usize) -> Arc<ReluNetwork> {
    Arc::new(ReluNetwork {
        layers: vec![Layer {
            weights: Matrix::zeros(n_out, n_in),
            bias: vec![0.0; n_out],
            activation: Activation::Linear,
        }],
    })
}

pub fn constant_net(n_in: usize, out: Vec<f64>) -> Arc<ReluNetwork> {
    Arc::new(ReluNetwork {
        layers: vec![Layer {
            weights: Matrix::zeros(out.len(), n_in),
            bias: out,
            activation: Activation::Linear,
        }],
    })
}

/// Linear read-out of the observation (single linear layer: `u = W obs`).
pub fn linear_net(weights: Matrix) -> Arc<ReluNetwork> {
    let rows = weights.rows();
    Arc::new(ReluNetwork {
        layers: vec![Layer {
            weights,
            bias: vec![0.0; rows],
            activation: Activation::Linear,
        }],
    })
}

// ---------------------------------------------------------------------------
// Pair systems with known behavior
// ---------------------------------------------------------------------------

pub fn square_set(r: f64) -> Polytope {
    Polytope::from_box(&IntervalBox::new(vec![-r, -r], vec![r, r]).unwrap()).unwrap()
}

/// Frozen world: identity dynamics, no actuation, zero controllers, unit
/// square collision set. The backprojection of any set is the set itself.
pub fn static_pair() -> PairSystem {
    let (_, _, pos) = double_integrator(0.25);
    let mk = |own_first: bool| {
        let obs = ObsMap::OwnState.realize(&pos, &pos, 4, 4, own_first).unwrap();
        AgentModel {
            a: Matrix::identity(4),
            b: Matrix::zeros(4, 2),
            pos_select: pos.clone(),
            obs_map: obs,
            controller: zero_net(4, 2),
            state_box: IntervalBox::new(vec![-2.0, -2.0, -1.0, -1.0], vec![2.0, 2.0, 1.0, 1.0])
                .unwrap(),
        }
    };
    PairSystem::new(mk(true), mk(false), square_set(1.0)).unwrap()
}

/// Single integrators with constant thrust pushing the pair apart much
/// faster than the workspace is wide: nothing can enter the collision set,
/// so its backprojection is empty.
pub fn separating_pair() -> PairSystem {
    let (a, b, pos) = single_integrator(0.25);
    let boxx = IntervalBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
    let mk = |own_first: bool, thrust: Vec<f64>| AgentModel {
        a: a.clone(),
        b: b.clone(),
        pos_select: pos.clone(),
        obs_map: ObsMap::OwnState.realize(&pos, &pos, 2, 2, own_first).unwrap(),
        controller: constant_net(2, thrust),
        state_box: boxx.clone(),
    };
    PairSystem::new(
        mk(true, vec![-40.0, 0.0]),
        mk(false, vec![40.0, 0.0]),
        square_set(1.0),
    )
    .unwrap()
}

/// Double integrators whose controllers steer each agent toward the other
/// with velocity damping, so the approach settles into the collision set.
/// Collisions are reachable from non-colliding states: not verified safe.
pub fn attracting_pair() -> PairSystem {
    let (a, b, pos) = double_integrator(0.25);
    let boxx =
        IntervalBox::new(vec![-2.0, -2.0, -1.5, -1.5], vec![2.0, 2.0, 1.5, 1.5]).unwrap();
    // u = 1.0 * (relative position of the other agent) - 2.0 * own velocity;
    // observation layout: [own state (4) | relative position (2)]
    let gain = Matrix::from_rows(&[
        vec![0.0, 0.0, -2.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, -2.0, 0.0, 1.0],
    ])
    .unwrap();
    let mk = |own_first: bool| AgentModel {
        a: a.clone(),
        b: b.clone(),
        pos_select: pos.clone(),
        obs_map: ObsMap::OwnPlusRelative.realize(&pos, &pos, 4, 4, own_first).unwrap(),
        controller: linear_net(gain.clone()),
        state_box: boxx.clone(),
    };
    PairSystem::new(mk(true), mk(false), square_set(0.5)).unwrap()
}

/// Random double-integrator pair with ReLU controllers of the given hidden
/// widths. Observation maps and collision shapes vary with the seed.
pub fn random_pair(r: &mut ChaCha8Rng, hidden: &[usize]) -> PairSystem {
    let (a, b, pos) = double_integrator(0.25);
    let pos_box = r.random_range(2.0..3.0);
    let vel_box = r.random_range(0.8..1.2);
    let boxx = IntervalBox::new(
        vec![-pos_box, -pos_box, -vel_box, -vel_box],
        vec![pos_box, pos_box, vel_box, vel_box],
    )
    .unwrap();
    let own_plus = r.random_bool(0.7);
    let n_in = if own_plus { 6 } else { 4 };
    let mut dims = vec![n_in];
    dims.extend_from_slice(hidden);
    dims.push(2);
    let gain = r.random_range(0.8..1.6);
    let mk = |r: &mut ChaCha8Rng, own_first: bool| {
        let obs = if own_plus {
            ObsMap::OwnPlusRelative.realize(&pos, &pos, 4, 4, own_first).unwrap()
        } else {
            ObsMap::OwnState.realize(&pos, &pos, 4, 4, own_first).unwrap()
        };
        AgentModel {
            a: a.clone(),
            b: b.clone(),
            pos_select: pos.clone(),
            obs_map: obs,
            controller: Arc::new(random_net(r, &dims, gain)),
            state_box: boxx.clone(),
        }
    };
    let agent_i = mk(r, true);
    let agent_j = mk(r, false);
    // Collision set: a box or a hexagon around the origin.
    let cset = if r.random_bool(0.5) {
        square_set(r.random_range(0.6..1.2))
    } else {
        let radius = r.random_range(0.6..1.2);
        let dirs = rebar_core::lingeo::facet_directions(6).unwrap();
        Polytope::from_halfspaces(
            2,
            dirs.iter().map(|d| HalfSpace::le(d.to_vec(), radius)).collect(),
        )
        .unwrap()
    };
    PairSystem::new(agent_i, agent_j, cset).unwrap()
}

/// True when both blocks of the stacked state sit inside their agents'
/// workspace boxes.
pub fn in_workspace(pair: &PairSystem, x: &[f64]) -> bool {
    let ni = pair.agent_i.state_dim();
    pair.agent_i.state_box.contains(&x[..ni]) && pair.agent_j.state_box.contains(&x[ni..])
}

/// Grid over the stacked state with separate position / velocity resolution
/// (assumes the double-integrator state layout).
pub fn di_grid(pair: &PairSystem, pos_counts: usize, vel_counts: usize) -> GridSpec {
    let counts = vec![
        pos_counts, pos_counts, vel_counts, vel_counts,
        pos_counts, pos_counts, vel_counts, vel_counts,
    ];
    GridSpec::over_pair(pair, counts).unwrap()
}

// ---------------------------------------------------------------------------
// Independent re-implementations (oracles)
// ---------------------------------------------------------------------------

/// Straight-line re-implementation of network evaluation, kept deliberately
/// naive and separate from the library path.
pub fn forward_reference(net: &ReluNetwork, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for layer in &net.layers {
        let rows = layer.weights.rows();
        let cols = layer.weights.cols();
        let mut z = vec![0.0; rows];
        for r in 0..rows {
            let mut acc = layer.bias[r];
            for c in 0..cols {
                acc += layer.weights.get(r, c) * h[c];
            }
            z[r] = acc;
        }
        if layer.activation == Activation::Relu {
            for v in z.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        h = z;
    }
    h
}

/// Straight-line re-implementation of the pair step.
pub fn step_reference(pair: &PairSystem, x: &[f64]) -> Vec<f64> {
    let ni = pair.agent_i.state_dim();
    let mut out = Vec::new();
    for (agent, off) in [(&pair.agent_i, 0), (&pair.agent_j, ni)] {
        let n = agent.state_dim();
        let mut obs = vec![0.0; agent.obs_map.rows()];
        for r in 0..agent.obs_map.rows() {
            for c in 0..x.len() {
                obs[r] += agent.obs_map.get(r, c) * x[c];
            }
        }
        let u = forward_reference(&agent.controller, &obs);
        for r in 0..n {
            let mut v = 0.0;
            for c in 0..n {
                v += agent.a.get(r, c) * x[off + c];
            }
            for (c, uc) in u.iter().enumerate() {
                v += agent.b.get(r, c) * uc;
            }
            out.push(v);
        }
    }
    out
}

/// Brute-force LP oracle: enumerate every choice of `n` tight hyperplanes
/// (constraint rows and finite bounds), solve the square system, keep
/// feasible vertices, and take the best objective. Sound for LPs whose
/// feasible set is compact, which the callers guarantee via finite bounds.
pub fn vertex_enum_lp(model: &MilpModel) -> (SolveStatus, Option<f64>) {
    let n = model.num_vars();
    #[derive(Clone)]
    struct Plane {
        coeffs: Vec<f64>,
        rhs: f64,
    }
    let mut planes = Vec::new();
    for c in &model.constraints {
        let mut coeffs = vec![0.0; n];
        for &(j, v) in &c.coeffs {
            coeffs[j] += v;
        }
        planes.push(Plane { coeffs, rhs: c.rhs });
    }
    for j in 0..n {
        let (lo, hi) = model.bounds(j);
        for b in [lo, hi] {
            if b.is_finite() {
                let mut coeffs = vec![0.0; n];
                coeffs[j] = 1.0;
                planes.push(Plane { coeffs, rhs: b });
            }
        }
    }

    let feasible = |x: &[f64]| -> bool {
        if model.max_violation(x) > 1e-7 {
            return false;
        }
        (0..n).all(|j| {
            let (lo, hi) = model.bounds(j);
            x[j] >= lo - 1e-7 && x[j] <= hi + 1e-7
        })
    };

    let mut best: Option<f64> = None;
    let mut combo = (0..n).collect::<Vec<usize>>();
    if planes.len() < n {
        return (SolveStatus::Infeasible, None);
    }
    loop {
        // Solve the n x n system for the current combination.
        let mut mat = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for (r, &pi) in combo.iter().enumerate() {
            mat[r * n..(r + 1) * n].copy_from_slice(&planes[pi].coeffs);
            rhs[r] = planes[pi].rhs;
        }
        if let Some(x) = solve_square(&mut mat, &mut rhs, n) {
            if feasible(&x) {
                let obj = model.objective_at(&x);
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return match best {
                    Some(obj) => (SolveStatus::Optimal, Some(obj)),
                    None => (SolveStatus::Infeasible, None),
                };
            }
            i -= 1;
            if combo[i] != i + planes.len() - n {
                combo[i] += 1;
                for k in i + 1..n {
                    combo[k] = combo[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_square(mat: &mut [f64], rhs: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for k in 0..n {
        let mut piv = k;
        let mut best = mat[k * n + k].abs();
        for r in k + 1..n {
            if mat[r * n + k].abs() > best {
                best = mat[r * n + k].abs();
                piv = r;
            }
        }
        if best < 1e-10 {
            return None;
        }
        if piv != k {
            for c in 0..n {
                mat.swap(k * n + c, piv * n + c);
            }
            rhs.swap(k, piv);
        }
        let d = mat[k * n + k];
        for c in 0..n {
            mat[k * n + c] /= d;
        }
        rhs[k] /= d;
        for r in 0..n {
            if r != k {
                let f = mat[r * n + k];
                if f != 0.0 {
                    for c in 0..n {
                        mat[r * n + c] -= f * mat[k * n + c];
                    }
                    rhs[r] -= f * rhs[k];
                }
            }
        }
    }
    Some(rhs.to_vec())
}

/// Random LP with box-bounded variables (compact feasible set).
pub fn random_lp(r: &mut ChaCha8Rng, n_vars: usize, n_rows: usize) -> MilpModel {
    let mut m = MilpModel::new();
    for j in 0..n_vars {
        let lo = r.random_range(-4.0..0.0);
        let hi = lo + r.random_range(0.5..5.0);
        m.add_var(format!("x{j}"), lo, hi);
    }
    for _ in 0..n_rows {
        let nnz = r.random_range(1..=n_vars.min(3));
        let mut vars: Vec<usize> = (0..n_vars).collect();
        for k in 0..nnz {
            let pick = r.random_range(k..n_vars);
            vars.swap(k, pick);
        }
        let coeffs: Vec<(usize, f64)> = vars[..nnz]
            .iter()
            .map(|&j| (j, r.random_range(-2.0..2.0)))
            .collect();
        let sense = match r.random_range(0..3) {
            0 => ConstraintSense::Le,
            1 => ConstraintSense::Ge,
            _ => ConstraintSense::Eq,
        };
        let rhs = r.random_range(-3.0..3.0);
        m.add_constraint(coeffs, sense, rhs);
    }
    let obj: Vec<(usize, f64)> = (0..n_vars).map(|j| (j, r.random_range(-1.0..1.0))).collect();
    m.set_objective(obj);
    m
}

/// Random MILP: a random LP plus up to `max_binaries` binaries wired into
/// random rows so they actually matter.
pub fn random_milp(r: &mut ChaCha8Rng, n_cont: usize, n_rows: usize, n_bin: usize) -> MilpModel {
    let mut m = random_lp(r, n_cont, n_rows);
    let mut bins = Vec::new();
    for k in 0..n_bin {
        bins.push(m.add_binary(format!("z{k}")));
    }
    // Couple binaries into fresh rows.
    for _ in 0..n_bin {
        let j = r.random_range(0..n_cont);
        let z = bins[r.random_range(0..n_bin)];
        let sense = if r.random_bool(0.5) {
            ConstraintSense::Le
        } else {
            ConstraintSense::Ge
        };
        m.add_constraint(
            vec![(j, r.random_range(-2.0..2.0)), (z, r.random_range(-3.0..3.0))],
            sense,
            r.random_range(-2.0..2.0),
        );
    }
    // Binaries sometimes show up in the objective.
    let mut obj = m.objective().to_vec();
    for &z in &bins {
        if r.random_bool(0.5) {
            obj.push((z, r.random_range(-1.0..1.0)));
        }
    }
    m.set_objective(obj);
    m
}

pub fn default_cfg() -> SolverConfig {
    SolverConfig::default()
}

/// Solver config with a tightened branch-and-bound gap, used by the
/// soundness suites so the stated membership slack has headroom over the
/// solver's own optimality gap.
pub fn tight_cfg() -> SolverConfig {
    SolverConfig {
        delta_gap: 1e-7,
        ..SolverConfig::default()
    }
}
