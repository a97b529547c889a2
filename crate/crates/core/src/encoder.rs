//! Builds the facet MILP: minimize `a . p_t` over all workspace states whose
//! one-step successor has relative position inside the target set, with both
//! controllers encoded exactly through per-neuron big-M constraints.

use std::ops::Range;

use crate::dynamics::{AgentModel, PairSystem};
use crate::linalg::Matrix;
use crate::lingeo::{Polytope, Sense};
use crate::network::{Activation, LayerBounds, ReluNetwork, Stability};
use crate::opt::{ConstraintSense, MilpModel};
use crate::{Error, Result};

/// Index ranges of one encoded controller.
#[derive(Debug, Clone)]
pub struct NetLayout {
    pub obs: Range<usize>,
    /// Pre-activation variables per layer.
    pub pre: Vec<Range<usize>>,
    /// Post-activation variables per layer; equals `pre` for linear layers.
    pub post: Vec<Range<usize>>,
    /// Binary variables, in allocation order.
    pub binaries: Vec<usize>,
    /// Final layer outputs (the control command).
    pub outputs: Range<usize>,
}

/// Where every decision variable of the facet MILP lives.
#[derive(Debug, Clone)]
pub struct VarLayout {
    pub x_t: Range<usize>,
    pub net_i: NetLayout,
    pub net_j: NetLayout,
    pub x_next: Range<usize>,
    pub p_t: Range<usize>,
    pub p_next: Range<usize>,
    pub num_vars: usize,
}

impl VarLayout {
    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.net_i.binaries.iter().chain(&self.net_j.binaries).copied()
    }

    pub fn binary_count(&self) -> usize {
        self.net_i.binaries.len() + self.net_j.binaries.len()
    }
}

/// Encodes one network over existing input variables. Affine layers become
/// equality rows; each ReLU neuron becomes an equality (stable) or one binary
/// plus four inequality rows (unstable), with its interval endpoints as the
/// big-M constants. Returns the layout, whose `outputs` range is the final
/// layer.
pub fn encode_relu(
    model: &mut MilpModel,
    net: &ReluNetwork,
    input_vars: &[usize],
    bounds: &LayerBounds,
    tag: &str,
) -> Result<NetLayout> {
    net.validate()?;
    if input_vars.len() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "encode_relu: {} input vars for a network expecting {}",
            input_vars.len(),
            net.input_dim()
        )));
    }
    if bounds.layers.len() != net.layers.len() {
        return Err(Error::Dimension(
            "encode_relu: bounds do not match network depth".into(),
        ));
    }
    let mut pre_ranges = Vec::with_capacity(net.layers.len());
    let mut post_ranges = Vec::with_capacity(net.layers.len());
    let mut binaries = Vec::new();
    let mut prev: Vec<usize> = input_vars.to_vec();
    for (l, (layer, ival)) in net.layers.iter().zip(&bounds.layers).enumerate() {
        let rows = layer.weights.rows();
        if ival.lower.len() != rows {
            return Err(Error::Dimension(format!(
                "encode_relu: layer {l} bounds have wrong width"
            )));
        }
        // Pre-activations with their interval bounds as variable bounds.
        let z0 = model.num_vars();
        for r in 0..rows {
            model.add_var(format!("{tag}_z{l}_{r}"), ival.lower[r], ival.upper[r]);
        }
        let z_range = z0..z0 + rows;
        for r in 0..rows {
            let mut coeffs = vec![(z0 + r, 1.0)];
            for (c, &pv) in prev.iter().enumerate() {
                let w = layer.weights.get(r, c);
                if w != 0.0 {
                    coeffs.push((pv, -w));
                }
            }
            model.add_constraint(coeffs, ConstraintSense::Eq, layer.bias[r]);
        }
        let post_range = match layer.activation {
            Activation::Linear => z_range.clone(),
            Activation::Relu => {
                let y0 = model.num_vars();
                for r in 0..rows {
                    let (lo, hi) = (ival.lower[r].max(0.0), ival.upper[r].max(0.0));
                    model.add_var(format!("{tag}_y{l}_{r}"), lo, hi);
                }
                for r in 0..rows {
                    let (z, y) = (z0 + r, y0 + r);
                    let (l_b, u_b) = (ival.lower[r], ival.upper[r]);
                    match ival.stability[r] {
                        Stability::Active => {
                            model.add_constraint(
                                vec![(y, 1.0), (z, -1.0)],
                                ConstraintSense::Eq,
                                0.0,
                            );
                        }
                        Stability::Inactive => {
                            model.add_constraint(vec![(y, 1.0)], ConstraintSense::Eq, 0.0);
                        }
                        Stability::Unstable => {
                            let d = model.add_binary(format!("{tag}_d{l}_{r}"));
                            binaries.push(d);
                            // y >= 0
                            model.add_constraint(vec![(y, 1.0)], ConstraintSense::Ge, 0.0);
                            // y >= z
                            model.add_constraint(
                                vec![(y, 1.0), (z, -1.0)],
                                ConstraintSense::Ge,
                                0.0,
                            );
                            // y <= z - l(1 - d)
                            model.add_constraint(
                                vec![(y, 1.0), (z, -1.0), (d, -l_b)],
                                ConstraintSense::Le,
                                -l_b,
                            );
                            // y <= u d
                            model.add_constraint(
                                vec![(y, 1.0), (d, -u_b)],
                                ConstraintSense::Le,
                                0.0,
                            );
                        }
                    }
                }
                y0..y0 + rows
            }
        };
        prev = post_range.clone().collect();
        pre_ranges.push(z_range);
        post_ranges.push(post_range);
    }
    let outputs = post_ranges.last().expect("validated non-empty").clone();
    Ok(NetLayout {
        obs: input_vars.first().copied().unwrap_or(0)
            ..input_vars.last().map_or(0, |v| v + 1),
        pre: pre_ranges,
        post: post_ranges,
        binaries,
        outputs,
    })
}

struct AgentEncoding {
    net: NetLayout,
    u_lo: Vec<f64>,
    u_hi: Vec<f64>,
}

fn encode_agent(
    model: &mut MilpModel,
    agent: &AgentModel,
    x_vars: &Range<usize>,
    stacked_lo: &[f64],
    stacked_hi: &[f64],
    tag: &str,
) -> Result<AgentEncoding> {
    // Observation variables, bounded by the interval image of the workspace.
    let (obs_lo, obs_hi) = agent.obs_map.interval_image(stacked_lo, stacked_hi)?;
    let o0 = model.num_vars();
    let n_in = agent.obs_map.rows();
    for r in 0..n_in {
        model.add_var(format!("{tag}_obs{r}"), obs_lo[r], obs_hi[r]);
    }
    for r in 0..n_in {
        let mut coeffs = vec![(o0 + r, 1.0)];
        for (c, xv) in x_vars.clone().enumerate() {
            let w = agent.obs_map.get(r, c);
            if w != 0.0 {
                coeffs.push((xv, -w));
            }
        }
        model.add_constraint(coeffs, ConstraintSense::Eq, 0.0);
    }
    let obs_vars: Vec<usize> = (o0..o0 + n_in).collect();
    let bounds = agent.controller.interval_bounds(&obs_lo, &obs_hi)?;
    let net = encode_relu(model, &agent.controller, &obs_vars, &bounds, tag)?;
    let last = bounds.layers.last().expect("non-empty network");
    Ok(AgentEncoding {
        net,
        u_lo: last.lower.clone(),
        u_hi: last.upper.clone(),
    })
}

/// Builds the MILP whose optimum is the supporting offset of the facet `a`:
/// minimize `a . p_t` subject to the workspace bounds, the closed-loop update
/// for both agents, and `p_{t+1}` inside `target`. The time index is
/// symbolic, so one model covers every timestep.
pub fn build_facet_milp(
    pair: &PairSystem,
    target: &Polytope,
    a: &[f64; 2],
) -> Result<(MilpModel, VarLayout)> {
    if target.dim != 2 {
        return Err(Error::Dimension("target set must live in the plane".into()));
    }
    if target.is_empty_marker() {
        return Err(Error::EmptyTarget);
    }
    target.validate()?;

    let mut model = MilpModel::new();
    let stacked = pair.stacked_box();
    let nx = pair.stacked_dim();
    let ni = pair.agent_i.state_dim();

    let x0 = model.num_vars();
    for d in 0..nx {
        model.add_var(format!("x{d}"), stacked.lower[d], stacked.upper[d]);
    }
    let x_t = x0..x0 + nx;

    let enc_i = encode_agent(&mut model, &pair.agent_i, &x_t, &stacked.lower, &stacked.upper, "i")?;
    let enc_j = encode_agent(&mut model, &pair.agent_j, &x_t, &stacked.lower, &stacked.upper, "j")?;

    // Successor state bounds by interval arithmetic, then the dynamics rows.
    let xn0 = model.num_vars();
    let mut next_bounds = Vec::with_capacity(nx);
    for (agent, enc, own_off) in [
        (&pair.agent_i, &enc_i, 0usize),
        (&pair.agent_j, &enc_j, ni),
    ] {
        let own_lo = &stacked.lower[own_off..own_off + agent.state_dim()];
        let own_hi = &stacked.upper[own_off..own_off + agent.state_dim()];
        let (alo, ahi) = agent.a.interval_image(own_lo, own_hi)?;
        let (blo, bhi) = agent.b.interval_image(&enc.u_lo, &enc.u_hi)?;
        for r in 0..agent.state_dim() {
            next_bounds.push((alo[r] + blo[r], ahi[r] + bhi[r]));
        }
    }
    for (d, &(lo, hi)) in next_bounds.iter().enumerate() {
        model.add_var(format!("xn{d}"), lo, hi);
    }
    let x_next = xn0..xn0 + nx;
    for (agent, enc, own_off) in [
        (&pair.agent_i, &enc_i, 0usize),
        (&pair.agent_j, &enc_j, ni),
    ] {
        for r in 0..agent.state_dim() {
            let mut coeffs = vec![(xn0 + own_off + r, 1.0)];
            for c in 0..agent.state_dim() {
                let w = agent.a.get(r, c);
                if w != 0.0 {
                    coeffs.push((x0 + own_off + c, -w));
                }
            }
            for (c, uv) in enc.net.outputs.clone().enumerate() {
                let w = agent.b.get(r, c);
                if w != 0.0 {
                    coeffs.push((uv, -w));
                }
            }
            model.add_constraint(coeffs, ConstraintSense::Eq, 0.0);
        }
    }

    // Relative positions now and next.
    let relpos_rows = |model: &mut MilpModel,
                       p_vars: &Range<usize>,
                       x_vars: &Range<usize>,
                       pos_i: &Matrix,
                       pos_j: &Matrix| {
        for d in 0..2 {
            let mut coeffs = vec![(p_vars.start + d, 1.0)];
            for c in 0..pos_j.cols() {
                let w = pos_j.get(d, c);
                if w != 0.0 {
                    coeffs.push((x_vars.start + ni + c, -w));
                }
            }
            for c in 0..pos_i.cols() {
                let w = pos_i.get(d, c);
                if w != 0.0 {
                    coeffs.push((x_vars.start + c, w));
                }
            }
            model.add_constraint(coeffs, ConstraintSense::Eq, 0.0);
        }
    };

    let relbox = pair.relpos_box()?;
    let pt0 = model.num_vars();
    for d in 0..2 {
        model.add_var(format!("p{d}"), relbox.lower[d], relbox.upper[d]);
    }
    let p_t = pt0..pt0 + 2;
    relpos_rows(&mut model, &p_t, &x_t, &pair.agent_i.pos_select, &pair.agent_j.pos_select);

    // Range of p_{t+1} from the successor-state intervals.
    let pn0 = model.num_vars();
    for d in 0..2 {
        let (mut lo, mut hi) = (0.0, 0.0);
        for c in 0..pair.agent_j.state_dim() {
            let w = pair.agent_j.pos_select.get(d, c);
            let (bl, bh) = next_bounds[ni + c];
            if w >= 0.0 {
                lo += w * bl;
                hi += w * bh;
            } else {
                lo += w * bh;
                hi += w * bl;
            }
        }
        for c in 0..pair.agent_i.state_dim() {
            let w = -pair.agent_i.pos_select.get(d, c);
            let (bl, bh) = next_bounds[c];
            if w >= 0.0 {
                lo += w * bl;
                hi += w * bh;
            } else {
                lo += w * bh;
                hi += w * bl;
            }
        }
        model.add_var(format!("pn{d}"), lo, hi);
    }
    let p_next = pn0..pn0 + 2;
    relpos_rows(&mut model, &p_next, &x_next, &pair.agent_i.pos_select, &pair.agent_j.pos_select);

    // Target membership rows over p_{t+1}.
    for h in &target.halfspaces {
        let coeffs: Vec<(usize, f64)> = h
            .normal
            .iter()
            .enumerate()
            .map(|(d, &v)| (pn0 + d, v))
            .collect();
        let sense = match h.sense {
            Sense::Ge => ConstraintSense::Ge,
            Sense::Le => ConstraintSense::Le,
        };
        model.add_constraint(coeffs, sense, h.offset);
    }

    model.set_objective(vec![(pt0, a[0]), (pt0 + 1, a[1])]);

    let layout = VarLayout {
        x_t,
        net_i: enc_i.net,
        net_j: enc_j.net,
        x_next,
        p_t,
        p_next,
        num_vars: model.num_vars(),
    };
    Ok((model, layout))
}

/// Primal hint for the facet MILP: read the relaxation's state, replay the
/// true closed loop through both controllers, and propose the binary values
/// of the actual activation pattern. Whenever that state's real successor
/// lands in the target, the proposal is feasible, which collapses the
/// branch-and-bound gap immediately.
/// Suggested exact values for binary variables, keyed by index.
pub type BinaryProposal = Vec<(usize, f64)>;

pub fn propagation_hint(
    pair: &PairSystem,
    layout: &VarLayout,
) -> Result<impl Fn(&[f64]) -> Option<BinaryProposal> + Send + Sync + use<>> {
    let stacked = pair.stacked_box();
    let agents = [pair.agent_i.clone(), pair.agent_j.clone()];
    let mut unstable: Vec<Vec<Vec<bool>>> = Vec::with_capacity(2);
    for agent in &agents {
        let (obs_lo, obs_hi) = agent.obs_map.interval_image(&stacked.lower, &stacked.upper)?;
        let bounds = agent.controller.interval_bounds(&obs_lo, &obs_hi)?;
        unstable.push(
            bounds
                .layers
                .iter()
                .map(|l| {
                    if l.activation == Activation::Relu {
                        l.stability.iter().map(|s| *s == Stability::Unstable).collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
        );
    }
    let x_range = layout.x_t.clone();
    let binaries: Vec<usize> = layout.binaries().collect();
    Ok(move |assignment: &[f64]| -> Option<BinaryProposal> {
        let x: Vec<f64> = assignment.get(x_range.clone())?.to_vec();
        let mut pattern = Vec::with_capacity(binaries.len());
        for (agent, layer_unstable) in agents.iter().zip(&unstable) {
            let obs = agent.obs_map.matvec(&x).ok()?;
            let mut h = obs;
            for (layer, flags) in agent.controller.layers.iter().zip(layer_unstable) {
                let mut z = layer.weights.matvec(&h).ok()?;
                for (zi, b) in z.iter_mut().zip(&layer.bias) {
                    *zi += b;
                }
                if layer.activation == Activation::Relu {
                    for (k, zi) in z.iter_mut().enumerate() {
                        if flags[k] {
                            pattern.push(if *zi > 0.0 { 1.0 } else { 0.0 });
                        }
                        *zi = zi.max(0.0);
                    }
                }
                h = z;
            }
        }
        debug_assert_eq!(pattern.len(), binaries.len());
        Some(binaries.iter().copied().zip(pattern).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    use std::sync::Arc;

    use crate::network::Layer;
    use crate::opt::{solve_milp, write_lp_text, SolveStatus, SolverConfig};

    fn net_1layer(weights: Matrix, bias: Vec<f64>, act: Activation, out_weights: Matrix) -> ReluNetwork {
        let out_rows = out_weights.rows();
        ReluNetwork {
            layers: vec![
                Layer { weights, bias, activation: act },
                Layer {
                    weights: out_weights,
                    bias: vec![0.0; out_rows],
                    activation: Activation::Linear,
                },
            ],
        }
    }

    #[test]
    fn stable_network_adds_no_binaries() {
        // Bias pushes every pre-activation above zero on the input box.
        let net = net_1layer(
            Matrix::identity(2),
            vec![10.0, 10.0],
            Activation::Relu,
            Matrix::identity(2),
        );
        let bounds = net.interval_bounds(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let mut model = MilpModel::new();
        let i0 = model.add_var("in0", -1.0, 1.0);
        let i1 = model.add_var("in1", -1.0, 1.0);
        let enc = encode_relu(&mut model, &net, &[i0, i1], &bounds, "t").unwrap();
        assert_eq!(enc.binaries.len(), 0);
        assert_eq!(model.num_binaries(), 0);
    }

    #[test]
    fn single_unstable_neuron_one_binary_four_rows() {
        let net = net_1layer(
            Matrix::new(1, 1, vec![1.0]).unwrap(),
            vec![0.0],
            Activation::Relu,
            Matrix::new(1, 1, vec![1.0]).unwrap(),
        );
        let bounds = net.interval_bounds(&[-1.0], &[1.0]).unwrap();
        let mut model = MilpModel::new();
        let i0 = model.add_var("in0", -1.0, 1.0);
        let rows_before = model.constraints.len();
        let enc = encode_relu(&mut model, &net, &[i0], &bounds, "t").unwrap();
        assert_eq!(enc.binaries.len(), 1);
        // rows: z eq, 4 relu inequalities, final layer z eq
        let ineq = model.constraints[rows_before..]
            .iter()
            .filter(|c| c.sense != ConstraintSense::Eq)
            .count();
        assert_eq!(ineq, 4);
    }

    #[test]
    fn fixed_input_reproduces_forward() {
        // 2-4-2 network with weights that straddle zero.
        let w1 = Matrix::from_rows(&[
            vec![0.6, -0.4],
            vec![-0.7, 0.3],
            vec![0.2, 0.9],
            vec![-0.5, -0.8],
        ])
        .unwrap();
        let w2 = Matrix::from_rows(&[
            vec![0.5, -0.6, 0.7, 0.1],
            vec![-0.2, 0.4, -0.9, 0.3],
        ])
        .unwrap();
        let net = ReluNetwork {
            layers: vec![
                Layer { weights: w1, bias: vec![0.05, -0.1, 0.0, 0.2], activation: Activation::Relu },
                Layer { weights: w2, bias: vec![-0.3, 0.12], activation: Activation::Linear },
            ],
        };
        let bounds = net.interval_bounds(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let cfg = SolverConfig::default();
        for x0 in [[0.3, -0.8], [0.0, 0.0], [-1.0, 1.0], [0.9, 0.9]] {
            let mut model = MilpModel::new();
            let i0 = model.add_var("in0", -1.0, 1.0);
            let i1 = model.add_var("in1", -1.0, 1.0);
            let enc = encode_relu(&mut model, &net, &[i0, i1], &bounds, "t").unwrap();
            model.add_constraint(vec![(i0, 1.0)], ConstraintSense::Eq, x0[0]);
            model.add_constraint(vec![(i1, 1.0)], ConstraintSense::Eq, x0[1]);
            model.set_objective(vec![]);
            let r = solve_milp(&model, &cfg).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            let want = net.forward(&x0).unwrap();
            for (k, ov) in enc.outputs.clone().enumerate() {
                assert!(
                    (r.assignment[ov] - want[k]).abs() < 1e-6,
                    "output {k}: {} vs {}",
                    r.assignment[ov],
                    want[k]
                );
            }
        }
    }

    #[test]
    fn pattern_fixed_lp_reproduces_forward() {
        // With every binary pinned to the activation pattern of a sampled
        // input, the pure LP restriction must reproduce the evaluation.
        let w1 = Matrix::from_rows(&[
            vec![0.9, -0.3],
            vec![-0.6, 0.8],
            vec![0.4, 0.5],
        ])
        .unwrap();
        let w2 = Matrix::from_rows(&[vec![0.7, -0.2, 0.5], vec![-0.4, 0.6, -0.8]]).unwrap();
        let net = ReluNetwork {
            layers: vec![
                Layer { weights: w1, bias: vec![0.05, -0.15, 0.0], activation: Activation::Relu },
                Layer { weights: w2, bias: vec![0.2, -0.1], activation: Activation::Linear },
            ],
        };
        let bounds = net.interval_bounds(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let cfg = SolverConfig::default();
        for x0 in [[0.4, -0.9], [-0.2, 0.3], [1.0, -1.0]] {
            let mut model = MilpModel::new();
            let i0 = model.add_var("in0", -1.0, 1.0);
            let i1 = model.add_var("in1", -1.0, 1.0);
            let enc = encode_relu(&mut model, &net, &[i0, i1], &bounds, "t").unwrap();
            model.add_constraint(vec![(i0, 1.0)], ConstraintSense::Eq, x0[0]);
            model.add_constraint(vec![(i1, 1.0)], ConstraintSense::Eq, x0[1]);
            // Pin binaries to the true pattern of x0.
            let z = {
                let mut z = net.layers[0].weights.matvec(&x0).unwrap();
                for (v, b) in z.iter_mut().zip(&net.layers[0].bias) {
                    *v += b;
                }
                z
            };
            let mut bin_iter = enc.binaries.iter();
            for (k, s) in bounds.layers[0].stability.iter().enumerate() {
                if *s == crate::network::Stability::Unstable {
                    let d = *bin_iter.next().unwrap();
                    let v = if z[k] > 0.0 { 1.0 } else { 0.0 };
                    model.set_bounds(d, v, v);
                }
            }
            model.set_objective(vec![]);
            let r = crate::opt::solve_lp(&model, &cfg).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            let want = net.forward(&x0).unwrap();
            for (k, ov) in enc.outputs.clone().enumerate() {
                assert!((r.assignment[ov] - want[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn binary_count_matches_unstable_neurons() {
        use crate::dynamics::{double_integrator, AgentModel, ObsMap, PairSystem};
        use crate::lingeo::IntervalBox;
        let (a, b, pos) = double_integrator(0.25);
        let boxx = IntervalBox::new(vec![-2.0, -2.0, -1.0, -1.0], vec![2.0, 2.0, 1.0, 1.0]).unwrap();
        let w1 = Matrix::from_rows(&[
            vec![0.4, -0.3, 0.2, 0.1],
            vec![-0.2, 0.5, -0.4, 0.3],
            vec![0.1, 0.1, 0.6, -0.5],
        ])
        .unwrap();
        let w2 = Matrix::from_rows(&[vec![0.5, -0.4, 0.3], vec![-0.3, 0.2, 0.6]]).unwrap();
        let net = Arc::new(ReluNetwork {
            layers: vec![
                Layer { weights: w1, bias: vec![0.0, 5.0, -0.1], activation: Activation::Relu },
                Layer { weights: w2, bias: vec![0.0, 0.0], activation: Activation::Linear },
            ],
        });
        let mk = |own_first: bool| AgentModel {
            a: a.clone(),
            b: b.clone(),
            pos_select: pos.clone(),
            obs_map: ObsMap::OwnState.realize(&pos, &pos, 4, 4, own_first).unwrap(),
            controller: Arc::clone(&net),
            state_box: boxx.clone(),
        };
        let pair = PairSystem::new(
            mk(true),
            mk(false),
            crate::lingeo::Polytope::from_box(
                &IntervalBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        let (model, layout) = build_facet_milp(&pair, &pair.collision_set, &[1.0, 0.0]).unwrap();
        let stacked = pair.stacked_box();
        let mut expected = 0usize;
        for agent in [&pair.agent_i, &pair.agent_j] {
            let (lo, hi) = agent.obs_map.interval_image(&stacked.lower, &stacked.upper).unwrap();
            expected += agent.controller.interval_bounds(&lo, &hi).unwrap().unstable_count();
        }
        assert_eq!(layout.binary_count(), expected);
        assert_eq!(model.num_binaries(), expected);
        // The bias of 5.0 stabilizes one neuron per controller.
        assert!(expected < 6);
    }

    #[test]
    fn identical_inputs_give_byte_identical_dumps() {
        use crate::dynamics::{double_integrator, AgentModel, ObsMap, PairSystem};
        use crate::lingeo::IntervalBox;
        let (a, b, pos) = double_integrator(0.25);
        let boxx = IntervalBox::new(vec![-2.0, -2.0, -1.0, -1.0], vec![2.0, 2.0, 1.0, 1.0]).unwrap();
        let net = net_1layer(
            Matrix::from_rows(&[
                vec![0.3, -0.2, 0.1, 0.4],
                vec![-0.1, 0.5, -0.3, 0.2],
            ])
            .unwrap(),
            vec![0.05, -0.05],
            Activation::Relu,
            Matrix::from_rows(&[vec![0.6, -0.5], vec![0.2, 0.7]]).unwrap(),
        );
        let mk = |own_first: bool| AgentModel {
            a: a.clone(),
            b: b.clone(),
            pos_select: pos.clone(),
            obs_map: ObsMap::OwnState.realize(&pos, &pos, 4, 4, own_first).unwrap(),
            controller: Arc::new(net.clone()),
            state_box: boxx.clone(),
        };
        let pair = PairSystem::new(
            mk(true),
            mk(false),
            crate::lingeo::Polytope::from_box(
                &IntervalBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        let (m1, _) = build_facet_milp(&pair, &pair.collision_set, &[0.0, 1.0]).unwrap();
        let (m2, _) = build_facet_milp(&pair, &pair.collision_set, &[0.0, 1.0]).unwrap();
        assert_eq!(write_lp_text(&m1), write_lp_text(&m2));
    }

    #[test]
    fn layout_ranges_disjoint_and_cover() {
        use crate::dynamics::{double_integrator, AgentModel, ObsMap, PairSystem};
        use crate::lingeo::IntervalBox;
        let (a, b, pos) = double_integrator(0.25);
        let boxx = IntervalBox::new(vec![-2.0, -2.0, -1.0, -1.0], vec![2.0, 2.0, 1.0, 1.0]).unwrap();
        let net = net_1layer(
            Matrix::from_rows(&[
                vec![0.3, -0.2, 0.1, 0.4],
                vec![-0.1, 0.5, -0.3, 0.2],
                vec![0.2, 0.2, 0.2, -0.6],
            ])
            .unwrap(),
            vec![0.0, 0.1, -0.1],
            Activation::Relu,
            Matrix::from_rows(&[vec![0.6, -0.5, 0.1], vec![0.2, 0.7, -0.9]]).unwrap(),
        );
        let mk = |own_first: bool| AgentModel {
            a: a.clone(),
            b: b.clone(),
            pos_select: pos.clone(),
            obs_map: ObsMap::OwnState.realize(&pos, &pos, 4, 4, own_first).unwrap(),
            controller: Arc::new(net.clone()),
            state_box: boxx.clone(),
        };
        let pair = PairSystem::new(
            mk(true),
            mk(false),
            crate::lingeo::Polytope::from_box(
                &IntervalBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        let (model, layout) = build_facet_milp(&pair, &pair.collision_set, &[1.0, 0.0]).unwrap();
        let mut seen = vec![false; model.num_vars()];
        fn mark(seen: &mut [bool], range: std::ops::Range<usize>) {
            for v in range {
                assert!(!seen[v], "variable {v} claimed twice");
                seen[v] = true;
            }
        }
        mark(&mut seen, layout.x_t.clone());
        for net in [&layout.net_i, &layout.net_j] {
            mark(&mut seen, net.obs.clone());
            for (l, pre) in net.pre.iter().enumerate() {
                mark(&mut seen, pre.clone());
                // post ranges alias pre for linear layers
                if net.post[l] != *pre {
                    mark(&mut seen, net.post[l].clone());
                }
            }
            for &b in &net.binaries {
                assert!(!seen[b], "binary {b} claimed twice");
                seen[b] = true;
            }
        }
        mark(&mut seen, layout.x_next.clone());
        mark(&mut seen, layout.p_t.clone());
        mark(&mut seen, layout.p_next.clone());
        assert!(seen.iter().all(|&s| s), "layout does not cover every variable");
        assert_eq!(layout.num_vars, model.num_vars());
    }
}
