//! Inter-agent control potentials and their gradients.
//!
//! Two families are provided:
//!
//! ```text
//! distance-based      V_ij = 1/4 (|q_ij|^2 - d_ij^2)^2      grad_i = (|q_ij|^2 - d_ij^2) q_ij
//! displacement-based  V_ij = 1/2 |q_ij - q*_ij|^2           grad_i = q_ij - q*_ij
//! ```
//!
//! with `q_ij = q_i - q_j`. Both depend only on the relative position, so
//! `grad_j V_ij = -grad_i V_ij` and the assembled forces sum to zero.
//!
//! The module only returns values and gradients; the dynamics decide the sign
//! convention (forces are `-grad`, so potential minima attract).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Configuration, Edge, FormationGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    DistanceBased,
    DisplacementBased,
}

/// A pair potential expressed in terms of the relative position `q_i - q_j`.
///
/// New potential families plug in by implementing this trait.
pub trait PairPotential {
    fn value(&self, rel: &[f64]) -> f64;

    /// Gradient with respect to `q_i`, written into `out`.
    fn gradient(&self, rel: &[f64], out: &mut [f64]);
}

/// Per-edge parameter, stored for the canonical direction `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EdgeParam {
    /// Desired inter-agent distance, stored squared (`d_ij^2 > 0`) since the
    /// potential only uses the square.
    SquaredDistance(f64),
    /// Desired relative position `q*_ij = q*_i - q*_j`.
    Displacement(Vec<f64>),
}

impl PairPotential for EdgeParam {
    fn value(&self, rel: &[f64]) -> f64 {
        match self {
            EdgeParam::SquaredDistance(d2) => {
                let e = norm_sq(rel) - d2;
                0.25 * e * e
            }
            EdgeParam::Displacement(target) => {
                0.5 * rel
                    .iter()
                    .zip(target)
                    .map(|(x, t)| (x - t) * (x - t))
                    .sum::<f64>()
            }
        }
    }

    fn gradient(&self, rel: &[f64], out: &mut [f64]) {
        match self {
            EdgeParam::SquaredDistance(d2) => {
                let e = norm_sq(rel) - d2;
                for (o, x) in out.iter_mut().zip(rel) {
                    *o = e * x;
                }
            }
            EdgeParam::Displacement(target) => {
                for ((o, x), t) in out.iter_mut().zip(rel).zip(target) {
                    *o = x - t;
                }
            }
        }
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Potential family plus one parameter per graph edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    kind: PotentialKind,
    num_agents: usize,
    dim: usize,
    edges: Vec<Edge>,
    params: Vec<EdgeParam>,
}

impl PotentialSpec {
    /// Distance-based potential with `distances[k]` attached to `graph.edges()[k]`.
    pub fn distance_based(graph: &FormationGraph, distances: &[f64]) -> Result<Self> {
        if distances.len() != graph.num_edges() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_edges(),
                found: distances.len(),
            });
        }
        if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::invalid(
                "distance",
                format!("desired distances must be positive, got {d}"),
            ));
        }
        let squared: Vec<f64> = distances.iter().map(|d| d * d).collect();
        Self::distance_squared_based(graph, &squared)
    }

    /// Distance-based potential from squared desired distances.
    pub fn distance_squared_based(graph: &FormationGraph, squared: &[f64]) -> Result<Self> {
        if squared.len() != graph.num_edges() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_edges(),
                found: squared.len(),
            });
        }
        if let Some(d) = squared.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::invalid(
                "distance",
                format!("squared desired distances must be positive, got {d}"),
            ));
        }
        Ok(Self::assemble(
            PotentialKind::DistanceBased,
            graph,
            squared.iter().map(|&d| EdgeParam::SquaredDistance(d)).collect(),
        ))
    }

    /// Displacement-based potential with `targets[k] = q*_i - q*_j` for the
    /// canonical edge `graph.edges()[k] = (i, j)`, `i < j`.
    pub fn displacement_based(graph: &FormationGraph, targets: &[Vec<f64>]) -> Result<Self> {
        if targets.len() != graph.num_edges() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_edges(),
                found: targets.len(),
            });
        }
        for t in targets {
            if t.len() != graph.dim() {
                return Err(Error::DimensionMismatch {
                    expected: graph.dim(),
                    found: t.len(),
                });
            }
            if t.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("displacement", "entries must be finite"));
            }
        }
        Ok(Self::assemble(
            PotentialKind::DisplacementBased,
            graph,
            targets.iter().cloned().map(EdgeParam::Displacement).collect(),
        ))
    }

    /// Reads the per-edge parameters off a desired configuration `q*`.
    pub fn from_desired(
        kind: PotentialKind,
        graph: &FormationGraph,
        desired: &Configuration,
    ) -> Result<Self> {
        desired.check_matches(graph.num_agents(), graph.dim())?;
        match kind {
            PotentialKind::DistanceBased => {
                let d2: Vec<f64> = graph
                    .edges()
                    .iter()
                    .map(|&(i, j)| desired.distance_sq(i, j))
                    .collect();
                Self::distance_squared_based(graph, &d2)
            }
            PotentialKind::DisplacementBased => {
                let t: Vec<Vec<f64>> = graph
                    .edges()
                    .iter()
                    .map(|&(i, j)| {
                        desired
                            .agent(i)
                            .iter()
                            .zip(desired.agent(j))
                            .map(|(a, b)| a - b)
                            .collect()
                    })
                    .collect();
                Self::displacement_based(graph, &t)
            }
        }
    }

    fn assemble(kind: PotentialKind, graph: &FormationGraph, params: Vec<EdgeParam>) -> Self {
        Self {
            kind,
            num_agents: graph.num_agents(),
            dim: graph.dim(),
            edges: graph.edges().to_vec(),
            params,
        }
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn params(&self) -> &[EdgeParam] {
        &self.params
    }

    /// Largest desired distance (distance-based) or target displacement norm.
    pub fn max_target_length(&self) -> f64 {
        self.params
            .iter()
            .map(|p| match p {
                EdgeParam::SquaredDistance(d2) => d2.sqrt(),
                EdgeParam::Displacement(t) => norm_sq(t).sqrt(),
            })
            .fold(0.0, f64::max)
    }

    /// Parameter for `(i, j)` oriented from `i` to `j`.
    fn oriented(&self, i: usize, j: usize) -> Result<(EdgeParam, bool)> {
        let k = self
            .edges
            .binary_search(&(i.min(j), i.max(j)))
            .map_err(|_| Error::NotAnEdge(i, j))?;
        let p = &self.params[k];
        Ok((p.clone(), i > j))
    }

    fn pair_param(&self, i: usize, j: usize) -> Result<EdgeParam> {
        let (p, flipped) = self.oriented(i, j)?;
        Ok(match (p, flipped) {
            (EdgeParam::Displacement(t), true) => {
                EdgeParam::Displacement(t.into_iter().map(|x| -x).collect())
            }
            (p, _) => p,
        })
    }

    fn check_vec(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `V_ij(q_i, q_j)` for an edge of the graph.
    pub fn eval_pair(&self, i: usize, j: usize, qi: &[f64], qj: &[f64]) -> Result<f64> {
        self.check_vec(qi)?;
        self.check_vec(qj)?;
        let rel: Vec<f64> = qi.iter().zip(qj).map(|(a, b)| a - b).collect();
        Ok(self.pair_param(i, j)?.value(&rel))
    }

    /// `(grad_{q_i} V_ij, grad_{q_j} V_ij)`.
    pub fn grad_pair(
        &self,
        i: usize,
        j: usize,
        qi: &[f64],
        qj: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_vec(qi)?;
        self.check_vec(qj)?;
        let rel: Vec<f64> = qi.iter().zip(qj).map(|(a, b)| a - b).collect();
        let mut gi = vec![0.0; self.dim];
        self.pair_param(i, j)?.gradient(&rel, &mut gi);
        let gj = gi.iter().map(|x| -x).collect();
        Ok((gi, gj))
    }

    /// `sum_{j in N_i} grad_{q_i} V_ij` at configuration `q`.
    pub fn force_sum(
        &self,
        graph: &FormationGraph,
        q: &Configuration,
        i: usize,
    ) -> Result<Vec<f64>> {
        q.check_matches(self.num_agents, self.dim)?;
        let mut acc = vec![0.0; self.dim];
        for &j in graph.neighbors(i)? {
            let (gi, _) = self.grad_pair(i, j, q.agent(i), q.agent(j))?;
            acc.iter_mut().zip(&gi).for_each(|(a, g)| *a += g);
        }
        Ok(acc)
    }

    /// Total formation potential, each undirected edge counted once.
    pub fn total_potential(&self, q: &Configuration) -> Result<f64> {
        q.check_matches(self.num_agents, self.dim)?;
        Ok(self.potential_raw(q.as_slice()))
    }

    /// Stacked gradient of [`Self::total_potential`]: row `i` is `force_sum(i)`.
    pub fn gradient(&self, q: &Configuration) -> Result<Vec<f64>> {
        q.check_matches(self.num_agents, self.dim)?;
        let mut out = vec![0.0; q.as_slice().len()];
        self.gradient_into(q.as_slice(), &mut out);
        Ok(out)
    }

    pub(crate) fn potential_raw(&self, q: &[f64]) -> f64 {
        let n = self.dim;
        let mut rel = vec![0.0; n];
        let mut total = 0.0;
        for (&(i, j), p) in self.edges.iter().zip(&self.params) {
            relative(q, i, j, n, &mut rel);
            total += p.value(&rel);
        }
        total
    }

    /// Hot-loop gradient assembly over raw stacked coordinates.
    pub(crate) fn gradient_into(&self, q: &[f64], out: &mut [f64]) {
        let n = self.dim;
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut rel = vec![0.0; n];
        let mut g = vec![0.0; n];
        for (&(i, j), p) in self.edges.iter().zip(&self.params) {
            relative(q, i, j, n, &mut rel);
            p.gradient(&rel, &mut g);
            for a in 0..n {
                out[i * n + a] += g[a];
                out[j * n + a] -= g[a];
            }
        }
    }

    /// Checks that this spec was built for `graph`.
    pub fn check_graph(&self, graph: &FormationGraph) -> Result<()> {
        if graph.num_agents() != self.num_agents
            || graph.dim() != self.dim
            || graph.edges() != self.edges.as_slice()
        {
            return Err(Error::invalid(
                "potential",
                "edge parameters do not match the formation graph",
            ));
        }
        Ok(())
    }
}

fn relative(q: &[f64], i: usize, j: usize, n: usize, rel: &mut [f64]) {
    for a in 0..n {
        rel[a] = q[i * n + a] - q[j * n + a];
    }
}
