use crate::error::Result;
use crate::graph::{Configuration, FormationGraph};
use crate::potential::PotentialSpec;

/// A formation graph together with the potential attached to its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Formation {
    graph: FormationGraph,
    potential: PotentialSpec,
}

impl Formation {
    pub fn new(graph: FormationGraph, potential: PotentialSpec) -> Result<Self> {
        potential.check_graph(&graph)?;
        Ok(Self { graph, potential })
    }

    pub fn graph(&self) -> &FormationGraph {
        &self.graph
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn num_agents(&self) -> usize {
        self.graph.num_agents()
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    pub(crate) fn check(&self, q: &Configuration) -> Result<()> {
        q.check_matches(self.num_agents(), self.dim())
    }
}
