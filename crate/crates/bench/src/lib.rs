//! Benchmark fixtures for the formation integrators.

use formation_vi::presets::{hex_wheel, random_box, unit_square};
use formation_vi::{Configuration, Formation, PotentialKind};

/// Formation, start positions and zero start velocities.
pub struct Fixture {
    pub name: &'static str,
    pub formation: Formation,
    pub q0: Configuration,
    pub v0: Configuration,
}

pub fn square() -> Fixture {
    let p = unit_square(PotentialKind::DistanceBased);
    Fixture {
        name: "square",
        formation: p.formation,
        q0: random_box(4, 2, None, 3.0, 0).expect("valid box"),
        v0: Configuration::zeros(4, 2),
    }
}

pub fn wheel() -> Fixture {
    let p = hex_wheel(PotentialKind::DistanceBased, 1.0).expect("valid radius");
    Fixture {
        name: "wheel",
        q0: random_box(7, 2, Some(&p.desired), 0.5, 0).expect("valid box"),
        formation: p.formation,
        v0: Configuration::zeros(7, 2),
    }
}
