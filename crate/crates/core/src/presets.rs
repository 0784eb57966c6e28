//! Ready-made formations and start configurations used by the experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Configuration, FormationGraph};
use crate::potential::{PotentialKind, PotentialSpec};
use crate::system::Formation;

/// A formation together with a configuration realising its desired shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub formation: Formation,
    pub desired: Configuration,
}

/// Builds a preset whose potential targets are read off `desired`.
pub fn from_shape(
    kind: PotentialKind,
    edges: &[(usize, usize)],
    desired: Configuration,
) -> Result<Preset> {
    let graph = FormationGraph::new(desired.num_agents(), desired.dim(), edges.iter().copied())?;
    let potential = PotentialSpec::from_desired(kind, &graph, &desired)?;
    Ok(Preset {
        formation: Formation::new(graph, potential)?,
        desired,
    })
}

/// Unit square with its four sides and one diagonal.
pub fn unit_square(kind: PotentialKind) -> Preset {
    let desired =
        Configuration::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).expect("rows");
    from_shape(kind, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], desired).expect("valid square")
}

/// Seven agents: a hub at the origin and six agents on a regular hexagon of
/// circumradius `radius`, joined by six spokes and five rim edges.
///
/// Eleven edges on seven planar agents is the minimal rigid count, and every
/// edge has length `radius`.
pub fn hex_wheel(kind: PotentialKind, radius: f64) -> Result<Preset> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid("radius", "must be positive"));
    }
    let mut rows = vec![[0.0, 0.0]];
    for k in 0..6 {
        let a = std::f64::consts::FRAC_PI_3 * k as f64;
        rows.push([radius * a.cos(), radius * a.sin()]);
    }
    let mut edges: Vec<(usize, usize)> = (1..=6).map(|k| (0, k)).collect();
    edges.extend((1..6).map(|k| (k, k + 1)));
    from_shape(kind, &edges, Configuration::from_rows(&rows)?)
}

/// Configuration with every coordinate drawn uniformly from
/// `center +- half_width` (the origin when `center` is `None`).
pub fn random_box(
    num_agents: usize,
    dim: usize,
    center: Option<&Configuration>,
    half_width: f64,
    seed: u64,
) -> Result<Configuration> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::invalid("half_width", "must be positive"));
    }
    if let Some(c) = center {
        c.check_matches(num_agents, dim)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..num_agents * dim)
        .map(|k| {
            let c = center.map_or(0.0, |c| c.as_slice()[k]);
            c + rng.gen_range(-half_width..half_width)
        })
        .collect();
    Configuration::new(num_agents, dim, data)
}
