#![allow(dead_code)]

use formation_vi::{Configuration, Formation, FormationGraph, PotentialKind, PotentialSpec};
use proptest::prelude::*;

/// Random connected-ish formation: a path through all agents plus extra pairs.
pub fn formation_strategy(
    kind: PotentialKind,
    max_agents: usize,
) -> impl Strategy<Value = (Formation, Configuration)> {
    (2..=max_agents, 1..=3usize)
        .prop_flat_map(move |(s, n)| {
            let extra = proptest::collection::vec((0..s, 0..s), 0..s);
            let desired = proptest::collection::vec(-2.0..2.0f64, s * n);
            let q = proptest::collection::vec(-3.0..3.0f64, s * n);
            (Just(s), Just(n), extra, desired, q)
        })
        .prop_map(move |(s, n, extra, desired, q)| {
            let mut edges: Vec<(usize, usize)> = (0..s - 1).map(|i| (i, i + 1)).collect();
            edges.extend(extra.into_iter().filter(|(i, j)| i != j));
            let g = FormationGraph::new(s, n, edges).unwrap();
            let desired = Configuration::new(s, n, desired).unwrap();
            let p = PotentialSpec::from_desired(kind, &g, &desired).unwrap();
            (Formation::new(g, p).unwrap(), Configuration::new(s, n, q).unwrap())
        })
}

pub fn kind_strategy() -> impl Strategy<Value = PotentialKind> {
    prop_oneof![
        Just(PotentialKind::DistanceBased),
        Just(PotentialKind::DisplacementBased)
    ]
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
