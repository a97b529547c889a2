//! Scenario files: agents, pairwise collision sets, facet count, horizon,
//! optional grid and tolerance overrides. Parsing is separated from path
//! resolution so untrusted text can be validated without touching the
//! filesystem.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{AgentModel, ObsMap, PairSystem};
use crate::linalg::Matrix;
use crate::lingeo::{IntervalBox, Polytope};
use crate::network::ReluNetwork;
use crate::opt::SolverConfig;
use crate::rebar::{MultiAgentSystem, PairJob};
use crate::{Error, Result};

pub const DEFAULT_FACETS: usize = 8;
pub const DEFAULT_HORIZON: usize = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObsMapSpec {
    /// `"own_state"` or `"own_plus_relative"`.
    Named(String),
    /// Explicit matrix over the `[x_own; x_other]` stacking.
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControllerSpec {
    /// Path to a network JSON file, relative to the scenario file.
    Path(String),
    /// Inline network.
    Inline(ReluNetwork),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    #[serde(default)]
    pub name: String,
    pub a: Matrix,
    pub b: Matrix,
    pub pos_select: Matrix,
    pub obs_map: ObsMapSpec,
    pub state_box: IntervalBox,
    pub controller: ControllerSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub i: usize,
    pub j: usize,
    pub collision_set: Polytope,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpecFile {
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub eps_feas: Option<f64>,
    pub eps_int: Option<f64>,
    pub delta_gap: Option<f64>,
    pub node_limit: Option<u64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, mut cfg: SolverConfig) -> SolverConfig {
        if let Some(v) = self.eps_feas {
            cfg.eps_feas = v;
        }
        if let Some(v) = self.eps_int {
            cfg.eps_int = v;
        }
        if let Some(v) = self.delta_gap {
            cfg.delta_gap = v;
        }
        if let Some(v) = self.node_limit {
            cfg.node_limit = v;
        }
        cfg
    }
}

/// On-disk scenario schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_facets")]
    pub facets: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    pub agents: Vec<AgentSpec>,
    pub pairs: Vec<PairSpec>,
    #[serde(default)]
    pub grid: Option<GridSpecFile>,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
}

fn default_facets() -> usize {
    DEFAULT_FACETS
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

impl ScenarioFile {
    /// Parses and structurally validates scenario text without resolving
    /// controller paths.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: ScenarioFile =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("scenario: {e}")))?;
        f.validate_structure()?;
        Ok(f)
    }

    fn validate_structure(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::Scenario("scenario needs at least one agent".into()));
        }
        if self.facets < 3 {
            return Err(Error::InvalidFacetCount(self.facets));
        }
        if self.horizon < 1 {
            return Err(Error::Scenario("horizon must be at least 1".into()));
        }
        let n = self.agents.len();
        let expected = n * n.saturating_sub(1) / 2;
        if self.pairs.len() != expected {
            return Err(Error::Scenario(format!(
                "{n} agents need {expected} pairs, got {}",
                self.pairs.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.pairs {
            if p.i >= p.j || p.j >= n {
                return Err(Error::Scenario(format!(
                    "pair ({}, {}) must satisfy i < j < {n}",
                    p.i, p.j
                )));
            }
            if !seen.insert((p.i, p.j)) {
                return Err(Error::Scenario(format!("duplicate pair ({}, {})", p.i, p.j)));
            }
            p.collision_set.validate()?;
            if p.collision_set.dim != 2 {
                return Err(Error::Scenario("collision sets must be planar".into()));
            }
            if p.collision_set.is_empty_marker() {
                return Err(Error::Scenario("collision sets must be nonempty".into()));
            }
        }
        for (k, agent) in self.agents.iter().enumerate() {
            if !agent.state_box.is_finite() {
                return Err(Error::Scenario(format!("agent {k}: state box must be finite")));
            }
            if agent.state_box.dim() != agent.a.rows() {
                return Err(Error::Scenario(format!("agent {k}: state box dim mismatch")));
            }
            if let ObsMapSpec::Named(name) = &agent.obs_map {
                if name != "own_state" && name != "own_plus_relative" {
                    return Err(Error::Scenario(format!(
                        "agent {k}: unknown obs_map '{name}'"
                    )));
                }
            }
            if let ControllerSpec::Inline(net) = &agent.controller {
                net.validate()?;
            }
        }
        Ok(())
    }
}

/// One agent with its controller loaded.
#[derive(Debug, Clone)]
pub struct LoadedAgent {
    pub name: String,
    pub a: Matrix,
    pub b: Matrix,
    pub pos_select: Matrix,
    pub obs_map: ObsMap,
    pub state_box: IntervalBox,
    pub controller: Arc<ReluNetwork>,
}

/// Fully resolved scenario, ready to assemble pair systems.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub facets: usize,
    pub horizon: usize,
    pub agents: Vec<LoadedAgent>,
    pub collision_sets: BTreeMap<(usize, usize), Polytope>,
    pub grid_counts: Option<Vec<usize>>,
    pub solver: SolverConfig,
}

impl Scenario {
    /// Resolves a parsed scenario; controller paths are read relative to
    /// `base_dir`.
    pub fn resolve(file: &ScenarioFile, base_dir: &Path) -> Result<Self> {
        let mut agents = Vec::with_capacity(file.agents.len());
        for (k, spec) in file.agents.iter().enumerate() {
            let controller = match &spec.controller {
                ControllerSpec::Inline(net) => {
                    net.validate()?;
                    Arc::new(net.clone())
                }
                ControllerSpec::Path(rel) => {
                    let path = base_dir.join(rel);
                    Arc::new(crate::network::load_network(&path).map_err(|e| {
                        Error::Scenario(format!("agent {k}: controller {}: {e}", path.display()))
                    })?)
                }
            };
            let obs_map = match &spec.obs_map {
                ObsMapSpec::Named(name) => match name.as_str() {
                    "own_state" => ObsMap::OwnState,
                    "own_plus_relative" => ObsMap::OwnPlusRelative,
                    other => {
                        return Err(Error::Scenario(format!(
                            "agent {k}: unknown obs_map '{other}'"
                        )))
                    }
                },
                ObsMapSpec::Explicit(rows) => ObsMap::Explicit(Matrix::from_rows(rows)?),
            };
            agents.push(LoadedAgent {
                name: if spec.name.is_empty() {
                    format!("agent{k}")
                } else {
                    spec.name.clone()
                },
                a: spec.a.clone(),
                b: spec.b.clone(),
                pos_select: spec.pos_select.clone(),
                obs_map,
                state_box: spec.state_box.clone(),
                controller,
            });
        }
        let mut collision_sets = BTreeMap::new();
        for p in &file.pairs {
            collision_sets.insert((p.i, p.j), p.collision_set.clone());
        }
        let solver = file
            .tolerances
            .clone()
            .unwrap_or_default()
            .apply(SolverConfig::default());
        let scenario = Scenario {
            facets: file.facets,
            horizon: file.horizon,
            agents,
            collision_sets,
            grid_counts: file.grid.as_ref().map(|g| g.counts.clone()),
            solver,
        };
        // Assemble every pair once so dimension mismatches surface at load.
        for &(i, j) in scenario.collision_sets.keys() {
            scenario.build_pair(i, j)?;
        }
        Ok(scenario)
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    /// Realizes the pair system for agents `i < j`: observation maps are
    /// expressed over the stacked `[x_i; x_j]` state.
    pub fn build_pair(&self, i: usize, j: usize) -> Result<PairSystem> {
        let collision = self
            .collision_sets
            .get(&(i, j))
            .ok_or_else(|| Error::Scenario(format!("no collision set for pair ({i}, {j})")))?;
        let ai = &self.agents[i];
        let aj = &self.agents[j];
        let (ni, nj) = (ai.a.rows(), aj.a.rows());
        let obs_i = ai
            .obs_map
            .realize(&ai.pos_select, &aj.pos_select, ni, nj, true)
            .map_err(|e| Error::Scenario(format!("agent {i} obs_map: {e}")))?;
        let obs_j = aj
            .obs_map
            .realize(&aj.pos_select, &ai.pos_select, nj, ni, false)
            .map_err(|e| Error::Scenario(format!("agent {j} obs_map: {e}")))?;
        let model_i = AgentModel {
            a: ai.a.clone(),
            b: ai.b.clone(),
            pos_select: ai.pos_select.clone(),
            obs_map: obs_i,
            controller: Arc::clone(&ai.controller),
            state_box: ai.state_box.clone(),
        };
        let model_j = AgentModel {
            a: aj.a.clone(),
            b: aj.b.clone(),
            pos_select: aj.pos_select.clone(),
            obs_map: obs_j,
            controller: Arc::clone(&aj.controller),
            state_box: aj.state_box.clone(),
        };
        PairSystem::new(model_i, model_j, collision.clone())
    }

    /// Builds the full pairwise job list.
    pub fn build_system(&self) -> Result<MultiAgentSystem> {
        let mut pairs = Vec::with_capacity(self.collision_sets.len());
        for &(i, j) in self.collision_sets.keys() {
            pairs.push(PairJob {
                i,
                j,
                system: self.build_pair(i, j)?,
            });
        }
        Ok(MultiAgentSystem {
            n_agents: self.n_agents(),
            pairs,
        })
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let file = ScenarioFile::from_json_str(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Scenario::resolve(&file, base)
}
