//! Per-agent discrete-time linear dynamics, observation maps into each
//! controller, and the pairwise closed-loop step.

use std::sync::Arc;

use crate::linalg::Matrix;
use crate::lingeo::{IntervalBox, Polytope};
use crate::log_warn;
use crate::network::ReluNetwork;
use crate::{Error, Result};

/// One agent, realized for a specific pair: the observation map is already
/// expressed over the stacked pair state `[x_i; x_j]`.
#[derive(Debug, Clone)]
pub struct AgentModel {
    /// State matrix, `n_x x n_x`.
    pub a: Matrix,
    /// Input matrix, `n_x x n_u`.
    pub b: Matrix,
    /// Planar position extraction, `2 x n_x`.
    pub pos_select: Matrix,
    /// Controller input from the stacked pair state, `n_in x (n_x_i + n_x_j)`.
    pub obs_map: Matrix,
    pub controller: Arc<ReluNetwork>,
    /// Finite per-dimension bounds; the agent's slice of the workspace.
    pub state_box: IntervalBox,
}

impl AgentModel {
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    fn validate(&self, stacked_dim: usize) -> Result<()> {
        let n = self.state_dim();
        if self.a.cols() != n {
            return Err(Error::Dimension("state matrix must be square".into()));
        }
        if self.b.rows() != n {
            return Err(Error::Dimension("input matrix row count != state dim".into()));
        }
        if self.pos_select.rows() != 2 || self.pos_select.cols() != n {
            return Err(Error::Dimension("pos_select must be 2 x state dim".into()));
        }
        if self.obs_map.cols() != stacked_dim {
            return Err(Error::Dimension(format!(
                "obs_map has {} columns, stacked state has {stacked_dim}",
                self.obs_map.cols()
            )));
        }
        if self.obs_map.rows() != self.controller.input_dim() {
            return Err(Error::Dimension(format!(
                "controller expects input {}, obs_map produces {}",
                self.controller.input_dim(),
                self.obs_map.rows()
            )));
        }
        if self.controller.output_dim() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "controller outputs {}, dynamics take {} inputs",
                self.controller.output_dim(),
                self.input_dim()
            )));
        }
        if self.state_box.dim() != n {
            return Err(Error::Dimension("state box dim != state dim".into()));
        }
        if !self.state_box.is_finite() {
            return Err(Error::Schema("state box must be finite in every dimension".into()));
        }
        self.controller.validate()
    }
}

/// Two agents plus the collision set over their relative position.
#[derive(Debug, Clone)]
pub struct PairSystem {
    pub agent_i: AgentModel,
    pub agent_j: AgentModel,
    pub collision_set: Polytope,
}

impl PairSystem {
    pub fn new(agent_i: AgentModel, agent_j: AgentModel, collision_set: Polytope) -> Result<Self> {
        let stacked = agent_i.a.rows() + agent_j.a.rows();
        agent_i.validate(stacked)?;
        agent_j.validate(stacked)?;
        if collision_set.dim != 2 {
            return Err(Error::Dimension("collision set must live in the plane".into()));
        }
        collision_set.validate()?;
        if collision_set.is_empty_marker() {
            return Err(Error::Scenario("collision set must be nonempty".into()));
        }
        Ok(Self { agent_i, agent_j, collision_set })
    }

    pub fn stacked_dim(&self) -> usize {
        self.agent_i.state_dim() + self.agent_j.state_dim()
    }

    /// Stacked workspace box `[box_i; box_j]`.
    pub fn stacked_box(&self) -> IntervalBox {
        let mut lower = self.agent_i.state_box.lower.clone();
        lower.extend_from_slice(&self.agent_j.state_box.lower);
        let mut upper = self.agent_i.state_box.upper.clone();
        upper.extend_from_slice(&self.agent_j.state_box.upper);
        IntervalBox { lower, upper }
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        let ni = self.agent_i.state_dim();
        (&x[..ni], &x[ni..])
    }

    /// Range of the relative position over the two state boxes; bounds the
    /// containment and online LPs.
    pub fn relpos_box(&self) -> Result<IntervalBox> {
        let (ilo, ihi) = self
            .agent_i
            .pos_select
            .interval_image(&self.agent_i.state_box.lower, &self.agent_i.state_box.upper)?;
        let (jlo, jhi) = self
            .agent_j
            .pos_select
            .interval_image(&self.agent_j.state_box.lower, &self.agent_j.state_box.upper)?;
        let lower = jlo.iter().zip(&ihi).map(|(a, b)| a - b).collect();
        let upper = jhi.iter().zip(&ilo).map(|(a, b)| a - b).collect();
        IntervalBox::new(lower, upper)
    }
}

/// Position of agent j in agent i's frame: `pos(j) - pos(i)`.
pub fn relative_position(pair: &PairSystem, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != pair.stacked_dim() {
        return Err(Error::Dimension(format!(
            "stacked state has length {}, expected {}",
            x.len(),
            pair.stacked_dim()
        )));
    }
    let (xi, xj) = pair.split(x);
    let pi = pair.agent_i.pos_select.matvec(xi)?;
    let pj = pair.agent_j.pos_select.matvec(xj)?;
    Ok(pj.iter().zip(&pi).map(|(a, b)| a - b).collect())
}

/// One closed-loop step of the stacked pair state. States outside the
/// workspace are stepped anyway (the encoder enforces the workspace bound
/// where it matters); the first such state logs a warning so stray rollouts
/// are visible without drowning long simulations.
pub fn step_pair(pair: &PairSystem, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != pair.stacked_dim() {
        return Err(Error::Dimension(format!(
            "stacked state has length {}, expected {}",
            x.len(),
            pair.stacked_dim()
        )));
    }
    let (xi, xj) = pair.split(x);
    if !pair.agent_i.state_box.contains(xi) || !pair.agent_j.state_box.contains(xj) {
        static WARNED: std::sync::atomic::AtomicBool = std::sync::atomic::AtomicBool::new(false);
        if !WARNED.swap(true, std::sync::atomic::Ordering::Relaxed) {
            log_warn!("step_pair: state outside the workspace box (warning once)");
        }
    }
    let mut out = Vec::with_capacity(x.len());
    for (agent, own) in [(&pair.agent_i, xi), (&pair.agent_j, xj)] {
        let obs = agent.obs_map.matvec(x)?;
        let u = agent.controller.forward(&obs)?;
        let ax = agent.a.matvec(own)?;
        let bu = agent.b.matvec(&u)?;
        out.extend(ax.iter().zip(&bu).map(|(p, q)| p + q));
    }
    Ok(out)
}

/// Named observation maps plus the explicit escape hatch. Named maps are
/// expressed over `[x_own; x_other]` and realized per pair.
#[derive(Debug, Clone, PartialEq)]
pub enum ObsMap {
    /// The controller sees the agent's own state.
    OwnState,
    /// Own state followed by the other agent's position relative to self.
    OwnPlusRelative,
    /// Explicit matrix over the `[x_own; x_other]` stacking.
    Explicit(Matrix),
}

impl ObsMap {
    /// Realizes the map over the pair stacking `[x_i; x_j]` for the agent in
    /// slot `own_first` (true for agent i).
    pub fn realize(
        &self,
        own_pos: &Matrix,
        other_pos: &Matrix,
        own_dim: usize,
        other_dim: usize,
        own_first: bool,
    ) -> Result<Matrix> {
        let own_block = |rows: &Matrix| -> Result<Matrix> {
            // Place `rows` (over x_own) and zeros (over x_other) in pair order.
            let zeros = Matrix::zeros(rows.rows(), other_dim);
            if own_first {
                rows.hstack(&zeros)
            } else {
                zeros.hstack(rows)
            }
        };
        match self {
            ObsMap::OwnState => own_block(&Matrix::identity(own_dim)),
            ObsMap::OwnPlusRelative => {
                let own = own_block(&Matrix::identity(own_dim))?;
                // relative = pos(other) - pos(own)
                let neg_own = {
                    let mut m = own_pos.clone();
                    for r in 0..m.rows() {
                        for c in 0..m.cols() {
                            m.set(r, c, -m.get(r, c));
                        }
                    }
                    m
                };
                let rel = if own_first {
                    neg_own.hstack(other_pos)?
                } else {
                    other_pos.hstack(&neg_own)?
                };
                let mut rows: Vec<Vec<f64>> = (0..own.rows()).map(|r| own.row(r).to_vec()).collect();
                rows.extend((0..rel.rows()).map(|r| rel.row(r).to_vec()));
                Matrix::from_rows(&rows)
            }
            ObsMap::Explicit(m) => {
                if m.cols() != own_dim + other_dim {
                    return Err(Error::Dimension(format!(
                        "explicit obs_map has {} columns, expected {}",
                        m.cols(),
                        own_dim + other_dim
                    )));
                }
                if own_first {
                    return Ok(m.clone());
                }
                // Swap the column blocks: the matrix is given as [own|other].
                let mut rows = Vec::with_capacity(m.rows());
                for r in 0..m.rows() {
                    let row = m.row(r);
                    let mut swapped = row[own_dim..].to_vec();
                    swapped.extend_from_slice(&row[..own_dim]);
                    rows.push(swapped);
                }
                Matrix::from_rows(&rows)
            }
        }
    }
}

/// Double integrator in the plane: state `(px, py, vx, vy)`, acceleration
/// input, position advancing by `v * dt`.
pub fn double_integrator(dt: f64) -> (Matrix, Matrix, Matrix) {
    let a = Matrix::from_rows(&[
        vec![1.0, 0.0, dt, 0.0],
        vec![0.0, 1.0, 0.0, dt],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ])
    .unwrap();
    let b = Matrix::from_rows(&[
        vec![0.0, 0.0],
        vec![0.0, 0.0],
        vec![dt, 0.0],
        vec![0.0, dt],
    ])
    .unwrap();
    let pos = Matrix::from_rows(&[
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
    ])
    .unwrap();
    (a, b, pos)
}

/// Single integrator in the plane: state `(px, py)`, velocity input.
pub fn single_integrator(dt: f64) -> (Matrix, Matrix, Matrix) {
    let a = Matrix::identity(2);
    let b = Matrix::from_rows(&[vec![dt, 0.0], vec![0.0, dt]]).unwrap();
    let pos = Matrix::identity(2);
    (a, b, pos)
}
