//! Experiment configuration files (TOML, unknown keys rejected).
//!
//! ```toml
//! kappa = 5.0
//! h = 0.005
//! steps = 200
//! integrator = "vi"
//! seed = 0
//!
//! [graph]
//! num_agents = 4
//! dim = 2
//! edges = [[0, 1], [1, 2], [2, 3], [3, 0], [0, 2]]
//!
//! [potential]
//! kind = "distance_based"
//! desired = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
//!
//! [initial]
//! random_half_width = 3.0
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use formation_vi::presets::random_box;
use formation_vi::{
    Configuration, Formation, FormationGraph, Integrator, PotentialKind, PotentialSpec, Sampling,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    pub h: f64,
    pub kappa: f64,
    pub steps: usize,
    /// Seed for random starts and random RoA sampling; recorded either way.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Integrator and step combinations for `compare`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunConfig>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roa: Option<RoaSection>,
}

fn default_integrator() -> Integrator {
    Integrator::Vi
}

fn default_rel_tol() -> f64 {
    0.01
}

fn default_vel_threshold() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub num_agents: usize,
    pub dim: usize,
    pub edges: Vec<[usize; 2]>,
}

/// Exactly one of `distances`, `displacements` or `desired` must be given.
/// Per-edge lists follow the order of `graph.edges`; a displacement for edge
/// `[i, j]` is the desired `q_i - q_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacements: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desired: Option<Configuration>,
}

/// Start positions come from at most one of `positions`, the
/// `displaced_agent` + `displaced_position` shorthand (desired shape with one
/// agent moved), or `random_half_width`. With none of them the desired shape
/// is used. Velocities default to zero; `zero_acceleration` instead picks
/// `v0 = -grad U(q0) / kappa`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Configuration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Configuration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displaced_agent: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displaced_position: Option<Vec<f64>>,
    /// Uniform box around the origin, or around the desired shape when
    /// `around_desired` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_half_width: Option<f64>,
    #[serde(default)]
    pub around_desired: bool,
    #[serde(default)]
    pub zero_acceleration: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub integrator: Integrator,
    pub h: f64,
    pub steps: usize,
}

impl RunConfig {
    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("{}@{}", self.integrator.name(), self.h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderConfig {
    pub h_list: Vec<f64>,
    pub horizon: f64,
    #[serde(default = "all_methods")]
    pub methods: Vec<Integrator>,
}

fn all_methods() -> Vec<Integrator> {
    vec![Integrator::Vi, Integrator::Euler, Integrator::Rk4]
}

/// Sweep settings; the desired shape is `potential.desired`, the step and
/// budget are the top-level `h` and `steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoaSection {
    pub displaced_agent: usize,
    pub sampling: Sampling,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_vel_threshold")]
    pub vel_threshold: f64,
}

/// Everything needed to start a run, cross-checked against the graph.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub formation: Formation,
    pub desired: Option<Configuration>,
    pub q0: Configuration,
    pub v0: Configuration,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::config(e.to_string()))
    }

    /// Applies `--h` / `--kappa` overrides.
    pub fn apply_overrides(&mut self, h: Option<f64>, kappa: Option<f64>) {
        if let Some(h) = h {
            self.h = h;
        }
        if let Some(k) = kappa {
            self.kappa = k;
        }
    }

    pub fn validate_numbers(&self) -> CliResult<()> {
        positive("h", self.h)?;
        positive("kappa", self.kappa)?;
        positive("rel_tol", self.rel_tol)?;
        if self.steps == 0 {
            return Err(CliError::config("steps: must be at least 1"));
        }
        for (k, r) in self.runs.iter().enumerate() {
            positive(&format!("runs[{k}].h"), r.h)?;
            if r.steps == 0 {
                return Err(CliError::config(format!("runs[{k}].steps: must be at least 1")));
            }
        }
        Ok(())
    }

    /// Builds the formation and the initial state.
    pub fn build(&self) -> CliResult<Experiment> {
        self.validate_numbers()?;
        let g = &self.graph;
        let graph = FormationGraph::new(g.num_agents, g.dim, g.edges.iter().map(|e| (e[0], e[1])))
            .map_err(|e| CliError::config(format!("graph: {e}")))?;
        if graph.num_edges() != g.edges.len() {
            return Err(CliError::config("graph.edges: duplicate edges"));
        }
        let (potential, desired) = self.build_potential(&graph)?;
        let formation = Formation::new(graph, potential).map_err(|e| CliError::config(format!("potential: {e}")))?;
        let (q0, v0) = self.build_initial(&formation, desired.as_ref())?;
        Ok(Experiment {
            formation,
            desired,
            q0,
            v0,
        })
    }

    fn build_potential(&self, graph: &FormationGraph) -> CliResult<(PotentialSpec, Option<Configuration>)> {
        let p = &self.potential;
        let given = [p.distances.is_some(), p.displacements.is_some(), p.desired.is_some()];
        if given.iter().filter(|x| **x).count() != 1 {
            return Err(CliError::config(
                "potential: give exactly one of `distances`, `displacements` or `desired`",
            ));
        }
        let field = |name: &str, e: formation_vi::Error| CliError::config(format!("potential.{name}: {e}"));
        if let Some(desired) = &p.desired {
            let spec = PotentialSpec::from_desired(p.kind, graph, desired).map_err(|e| field("desired", e))?;
            return Ok((spec, Some(desired.clone())));
        }
        let edges = &self.graph.edges;
        // Canonical edge (i < j) -> position in the config list and orientation.
        let index: BTreeMap<(usize, usize), (usize, bool)> = edges
            .iter()
            .enumerate()
            .map(|(k, e)| ((e[0].min(e[1]), e[0].max(e[1])), (k, e[0] > e[1])))
            .collect();
        match (p.kind, &p.distances, &p.displacements) {
            (PotentialKind::DistanceBased, Some(d), None) => {
                if d.len() != edges.len() {
                    return Err(CliError::config(format!(
                        "potential.distances: expected {} entries, found {}",
                        edges.len(),
                        d.len()
                    )));
                }
                let ordered: Vec<f64> = graph.edges().iter().map(|e| d[index[e].0]).collect();
                let spec = PotentialSpec::distance_based(graph, &ordered).map_err(|e| field("distances", e))?;
                Ok((spec, None))
            }
            (PotentialKind::DisplacementBased, None, Some(t)) => {
                if t.len() != edges.len() {
                    return Err(CliError::config(format!(
                        "potential.displacements: expected {} entries, found {}",
                        edges.len(),
                        t.len()
                    )));
                }
                let ordered: Vec<Vec<f64>> = graph
                    .edges()
                    .iter()
                    .map(|e| {
                        let (k, flipped) = index[e];
                        if flipped {
                            t[k].iter().map(|x| -x).collect()
                        } else {
                            t[k].clone()
                        }
                    })
                    .collect();
                let spec =
                    PotentialSpec::displacement_based(graph, &ordered).map_err(|e| field("displacements", e))?;
                Ok((spec, None))
            }
            (PotentialKind::DistanceBased, _, _) => Err(CliError::config(
                "potential.displacements: not valid for kind = \"distance_based\"",
            )),
            (PotentialKind::DisplacementBased, _, _) => Err(CliError::config(
                "potential.distances: not valid for kind = \"displacement_based\"",
            )),
        }
    }

    fn build_initial(
        &self,
        formation: &Formation,
        desired: Option<&Configuration>,
    ) -> CliResult<(Configuration, Configuration)> {
        let init = &self.initial;
        let (s, n) = (formation.num_agents(), formation.dim());
        let sources = [
            init.positions.is_some(),
            init.displaced_agent.is_some() || init.displaced_position.is_some(),
            init.random_half_width.is_some(),
        ];
        if sources.iter().filter(|x| **x).count() > 1 {
            return Err(CliError::config(
                "initial: give at most one of `positions`, `displaced_agent`/`displaced_position` or `random_half_width`",
            ));
        }
        let need_desired = |what: &str| {
            desired
                .cloned()
                .ok_or_else(|| CliError::config(format!("initial: {what} requires `potential.desired`")))
        };
        let q0 = if let Some(q) = &init.positions {
            q.clone()
        } else if sources[1] {
            let (Some(agent), Some(pos)) = (init.displaced_agent, &init.displaced_position) else {
                return Err(CliError::config(
                    "initial: `displaced_agent` and `displaced_position` go together",
                ));
            };
            if agent >= s {
                return Err(CliError::config(format!(
                    "initial.displaced_agent: {agent} out of range for {s} agents"
                )));
            }
            if pos.len() != n {
                return Err(CliError::config(format!(
                    "initial.displaced_position: expected {n} coordinates, found {}",
                    pos.len()
                )));
            }
            let mut q = need_desired("`displaced_agent`")?;
            q.agent_mut(agent).copy_from_slice(pos);
            q
        } else if let Some(half) = init.random_half_width {
            let center = if init.around_desired {
                Some(need_desired("`around_desired`")?)
            } else {
                None
            };
            random_box(s, n, center.as_ref(), half, self.seed)
                .map_err(|e| CliError::config(format!("initial.random_half_width: {e}")))?
        } else {
            need_desired("a default start")?
        };
        if q0.num_agents() != s || q0.dim() != n {
            return Err(CliError::config(format!(
                "initial.positions: expected {s} agents in dimension {n}"
            )));
        }
        let v0 = match (&init.velocities, init.zero_acceleration) {
            (Some(_), true) => {
                return Err(CliError::config(
                    "initial: `velocities` and `zero_acceleration` are exclusive",
                ))
            }
            (Some(v), false) => {
                if v.num_agents() != s || v.dim() != n {
                    return Err(CliError::config(format!(
                        "initial.velocities: expected {s} agents in dimension {n}"
                    )));
                }
                v.clone()
            }
            (None, true) => {
                let g = formation.potential().gradient(&q0)?;
                Configuration::new(s, n, g.iter().map(|x| -x / self.kappa).collect())?
            }
            (None, false) => Configuration::zeros(s, n),
        };
        Ok((q0, v0))
    }
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("{name}: must be positive, got {x}")))
    }
}
