//! Forced variational integrators for formation control of double-integrator
//! agents.
//!
//! Agents interact through edge potentials on an undirected graph and are
//! damped by a linear force `-kappa qdot`. The crate provides
//!
//! * the formation graph, configurations and shape congruence ([`graph`]),
//! * distance- and displacement-based potentials ([`potential`]),
//! * the explicit forced variational integrator with its discrete Legendre
//!   maps and discrete energy ([`vi`]),
//! * Euler and RK4 baselines on the continuous dynamics ([`reference`]),
//! * step-size bounds, energy audits and order estimation ([`diagnostics`]),
//! * region-of-attraction sweeps ([`roa`]).

pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod potential;
pub mod presets;
pub mod reference;
pub mod roa;
pub mod system;
pub mod trajectory;
pub mod vi;

pub use diagnostics::{
    alpha_bound, audit_energy, dissipation_rate_error, estimate_order, max_guaranteed_steps,
    AlphaInputs, AlphaReport, EnergyAudit, OrderEstimate, OrderProblem,
};
pub use error::{Error, Result};
pub use graph::{is_congruent, max_distance_discrepancy, Configuration, Edge, FormationGraph};
pub use potential::{EdgeParam, PairPotential, PotentialKind, PotentialSpec};
pub use reference::{euler_step, rhs, rk4_step, run_reference, FirstOrderState};
pub use presets::Preset;
pub use reference::integrate_final;
pub use roa::{
    classify_final, run_sweep, run_sweep_to_dir, Classification, RoaConfig, RoaOutcome, Sampling,
};
pub use system::Formation;
pub use trajectory::{EnergyRecord, Integrator, Trajectory};
pub use vi::{
    discrete_energy, discrete_legendre_minus, discrete_legendre_plus, init_from_ic, run_vi,
    vi_step, DiscreteEnergy, MomentumVector, ViParams, ViState,
};

/// Runs any of the integrators with a common signature.
pub fn simulate(
    integrator: Integrator,
    q0: &Configuration,
    v0: &Configuration,
    h: f64,
    kappa: f64,
    formation: &Formation,
    num_steps: usize,
) -> Result<Trajectory> {
    match integrator {
        Integrator::Vi => run_vi(q0, v0, &ViParams::new(h, kappa)?, formation, num_steps),
        m => run_reference(m, q0, v0, h, kappa, formation, num_steps),
    }
}
