use serde::{Deserialize, Serialize};

use crate::graph::Configuration;

/// Time stepper used to produce a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Forced variational integrator (explicit two-step position recursion).
    Vi,
    /// Explicit Euler on the first-order damped dynamics.
    Euler,
    /// Classical four-stage Runge-Kutta on the first-order damped dynamics.
    Rk4,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::Vi => "vi",
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
        }
    }

    /// Right-hand-side (force) evaluations spent per step.
    pub fn rhs_evals_per_step(self) -> u64 {
        match self {
            Integrator::Vi | Integrator::Euler => 1,
            Integrator::Rk4 => 4,
        }
    }
}

impl std::str::FromStr for Integrator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vi" => Ok(Integrator::Vi),
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(format!("unknown integrator `{other}` (expected vi, euler or rk4)")),
        }
    }
}

/// Energy split at one record of a trajectory, in physical units.
///
/// For the variational integrator record `k` is the trapezoidal energy of the
/// interval `[t_k, t_{k+1}]`, i.e. the discrete energy divided by `h`. For the
/// reference integrators it is the Hamiltonian at `t_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub step: usize,
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub integrator: Integrator,
    pub h: f64,
    /// `q_0 ... q_N` (shorter when the run diverged).
    pub positions: Vec<Configuration>,
    /// Momenta at each position for the first-order integrators.
    pub momenta: Option<Vec<Configuration>>,
    pub energy: Vec<EnergyRecord>,
    /// Step index at which a non-finite state first appeared.
    pub divergence: Option<usize>,
    pub rhs_evals: u64,
}

impl Trajectory {
    pub fn last(&self) -> &Configuration {
        self.positions.last().expect("trajectory holds q_0")
    }

    pub fn num_steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn total_energy(&self) -> Vec<f64> {
        self.energy.iter().map(|e| e.total).collect()
    }
}
