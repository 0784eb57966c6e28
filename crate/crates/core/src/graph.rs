//! Interaction topology and stacked agent configurations.
//!
//! A [`FormationGraph`] is an undirected simple graph over `s` agents living in
//! `R^n`. Edges are kept as canonical `(min, max)` pairs, sorted, so iteration
//! order is deterministic and every unordered pair appears once.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical undirected edge, always stored with `.0 < .1`.
pub type Edge = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormationGraph {
    num_agents: usize,
    dim: usize,
    edges: Vec<Edge>,
    neighbors: Vec<Vec<usize>>,
}

impl FormationGraph {
    /// Builds a graph, collapsing duplicate pairs and rejecting self-loops and
    /// out-of-range indices.
    pub fn new(
        num_agents: usize,
        dim: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if num_agents == 0 {
            return Err(Error::invalid("num_agents", "must be at least 1"));
        }
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            for index in [i, j] {
                if index >= num_agents {
                    return Err(Error::AgentOutOfRange { index, num_agents });
                }
            }
            set.insert((i.min(j), i.max(j)));
        }
        let edges: Vec<Edge> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); num_agents];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        Ok(Self {
            num_agents,
            dim,
            edges,
            neighbors,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges in ascending order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The neighbor set of agent `i`.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.neighbors
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::AgentOutOfRange {
                index: i,
                num_agents: self.num_agents,
            })
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Position of the canonical edge `{i, j}` in [`Self::edges`].
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }
}

/// Stacked positions (or velocities, or momenta) of `s` agents in `R^n`.
///
/// Serialized as a list of per-agent rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Configuration {
    num_agents: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Configuration {
    pub fn new(num_agents: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != num_agents * dim {
            return Err(Error::DimensionMismatch {
                expected: num_agents * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(
                "configuration",
                format!("entry {pos} is not finite"),
            ));
        }
        Ok(Self {
            num_agents,
            dim,
            data,
        })
    }

    /// Wraps stepper output that has already been checked for finiteness.
    pub(crate) fn from_raw(num_agents: usize, dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), num_agents * dim);
        Self {
            num_agents,
            dim,
            data,
        }
    }

    pub fn zeros(num_agents: usize, dim: usize) -> Self {
        Self::from_raw(num_agents, dim, vec![0.0; num_agents * dim])
    }

    /// One row per agent; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let num_agents = rows.len();
        if num_agents == 0 {
            return Err(Error::invalid("configuration", "no agents"));
        }
        let dim = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(num_agents * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(num_agents, dim, data)
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn agent_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Mean position of all agents.
    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for row in self.data.chunks(self.dim) {
            for (ck, x) in c.iter_mut().zip(row) {
                *ck += x;
            }
        }
        let s = self.num_agents as f64;
        c.iter_mut().for_each(|x| *x /= s);
        c
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.agent(i), self.agent(j))
    }

    pub fn distance_sq(&self, i: usize, j: usize) -> f64 {
        self.agent(i)
            .iter()
            .zip(self.agent(j))
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    }

    pub(crate) fn check_matches(&self, num_agents: usize, dim: usize) -> Result<()> {
        if self.num_agents != num_agents {
            return Err(Error::DimensionMismatch {
                expected: num_agents,
                found: self.num_agents,
            });
        }
        if self.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim,
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Configuration {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Configuration::from_rows(&rows)
    }
}

impl From<Configuration> for Vec<Vec<f64>> {
    fn from(q: Configuration) -> Self {
        q.rows()
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Shape equality over all agent pairs, not just graph edges.
///
/// Each pairwise distance of `q1` must lie within `rel_tol` of the matching
/// distance in the reference `q2`, relative to the reference distance; pairs
/// that coincide in `q2` are compared against `rel_tol` absolutely.
pub fn is_congruent(q1: &Configuration, q2: &Configuration, rel_tol: f64) -> Result<bool> {
    Ok(max_distance_discrepancy(q1, q2)? <= rel_tol)
}

/// Largest pairwise distance discrepancy of `q1` against reference `q2`, using
/// the same relative/absolute rule as [`is_congruent`].
pub fn max_distance_discrepancy(q1: &Configuration, q2: &Configuration) -> Result<f64> {
    q1.check_matches(q2.num_agents(), q2.dim())?;
    let s = q1.num_agents();
    let mut worst = 0.0_f64;
    for i in 0..s {
        for j in i + 1..s {
            let d1 = q1.distance(i, j);
            let d2 = q2.distance(i, j);
            let gap = (d1 - d2).abs();
            let e = if d2 == 0.0 { gap } else { gap / d2 };
            if e.is_nan() {
                return Ok(f64::INFINITY);
            }
            worst = worst.max(e);
        }
    }
    Ok(worst)
}
