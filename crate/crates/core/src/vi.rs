//! Forced variational integrator for damped double-integrator formations.
//!
//! The discrete Lagrangian is the trapezoidal rule applied to
//! `L = 1/2 |qdot|^2 - U(q)` over one step,
//!
//! ```text
//! L_d(q0, q1) = |q1 - q0|^2 / (2h) - h/2 (U(q0) + U(q1))
//! ```
//!
//! and the damping force `-kappa qdot` is split by the same rule into the two
//! discrete force one-forms `F-_d = F+_d = -kappa/2 (q1 - q0)`. The forced
//! discrete Euler-Lagrange equations are then linear in `q_{k+1}`:
//!
//! ```text
//! (1 + kappa h/2) q_{k+1} = 2 q_k - (1 - kappa h/2) q_{k-1} - h^2 grad U(q_k)
//! ```
//!
//! so every step is explicit and costs one gradient evaluation. Its continuous
//! limit is `qddot = -kappa qdot - grad U`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Configuration, FormationGraph};
use crate::system::Formation;
use crate::trajectory::{EnergyRecord, Integrator, Trajectory};

/// Step size, damping gain and the recursion coefficients derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawViParams", into = "RawViParams")]
pub struct ViParams {
    h: f64,
    kappa: f64,
    kappa_h: f64,
    kappa_bar_h: f64,
}

#[derive(Serialize, Deserialize)]
struct RawViParams {
    h: f64,
    kappa: f64,
}

impl TryFrom<RawViParams> for ViParams {
    type Error = Error;
    fn try_from(raw: RawViParams) -> Result<Self> {
        ViParams::new(raw.h, raw.kappa)
    }
}

impl From<ViParams> for RawViParams {
    fn from(p: ViParams) -> Self {
        RawViParams {
            h: p.h,
            kappa: p.kappa,
        }
    }
}

impl ViParams {
    pub fn new(h: f64, kappa: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("h", format!("must be positive, got {h}")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
        }
        let kh = kappa * h;
        Ok(Self {
            h,
            kappa,
            kappa_h: (kh - 2.0) / (kh + 2.0),
            kappa_bar_h: 2.0 * h * h / (kh + 2.0),
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Weight of `q_{k-1}`; always in `(-1, 1)`.
    pub fn kappa_h(&self) -> f64 {
        self.kappa_h
    }

    /// Weight of `q_k`, equal to `1 - kappa_h`.
    pub fn current_weight(&self) -> f64 {
        4.0 / (self.kappa * self.h + 2.0)
    }

    /// Weight of the potential gradient at `q_k`.
    pub fn kappa_bar_h(&self) -> f64 {
        self.kappa_bar_h
    }
}

/// The position pair `(q_{k-1}, q_k)` advanced by the discrete flow.
#[derive(Debug, Clone, PartialEq)]
pub struct ViState {
    pub q_prev: Configuration,
    pub q_curr: Configuration,
    pub step_index: usize,
}

/// Stacked discrete momenta of all agents (unit masses).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumVector(pub Configuration);

impl MomentumVector {
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        self.0.agent(i)
    }

    pub fn norm_sq(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum()
    }
}

/// Starts the two-step recursion from `q_0` and `v_0`: `q_1 = q_0 + h v_0`.
pub fn init_from_ic(q0: &Configuration, v0: &Configuration, params: &ViParams) -> Result<ViState> {
    v0.check_matches(q0.num_agents(), q0.dim())?;
    let h = params.h();
    let q1: Vec<f64> = q0
        .as_slice()
        .iter()
        .zip(v0.as_slice())
        .map(|(q, v)| q + h * v)
        .collect();
    Ok(ViState {
        q_prev: q0.clone(),
        q_curr: Configuration::from_raw(q0.num_agents(), q0.dim(), q1),
        step_index: 1,
    })
}

/// One explicit step `(q_{k-1}, q_k) -> (q_k, q_{k+1})`.
pub fn vi_step(state: &ViState, params: &ViParams, formation: &Formation) -> Result<ViState> {
    formation.check(&state.q_prev)?;
    formation.check(&state.q_curr)?;
    let mut grad = vec![0.0; state.q_curr.as_slice().len()];
    let next = advance(
        state.q_prev.as_slice(),
        state.q_curr.as_slice(),
        params,
        formation,
        &mut grad,
    );
    let step_index = state.step_index + 1;
    if next.iter().any(|x| !x.is_finite()) {
        return Err(Error::Diverged { step: step_index });
    }
    Ok(ViState {
        q_prev: state.q_curr.clone(),
        q_curr: Configuration::from_raw(formation.num_agents(), formation.dim(), next),
        step_index,
    })
}

/// Raw recursion, written as `q_k + kappa_h (q_{k-1} - q_k) - kappa_bar_h grad`
/// which is algebraically the weighted form and leaves rest states exactly
/// fixed.
pub(crate) fn advance(
    prev: &[f64],
    curr: &[f64],
    params: &ViParams,
    formation: &Formation,
    grad: &mut [f64],
) -> Vec<f64> {
    formation.potential().gradient_into(curr, grad);
    let a = params.kappa_h();
    let c = params.kappa_bar_h();
    prev.iter()
        .zip(curr)
        .zip(grad.iter())
        .map(|((qp, qc), g)| qc + a * (qp - qc) - c * g)
        .collect()
}

/// Runs `num_steps` steps from `(q_0, v_0)`, recording `q_0 ... q_N` and the
/// per-interval energy. Stops early and records the step if the state becomes
/// non-finite.
pub fn run_vi(
    q0: &Configuration,
    v0: &Configuration,
    params: &ViParams,
    formation: &Formation,
    num_steps: usize,
) -> Result<Trajectory> {
    if num_steps == 0 {
        return Err(Error::invalid("num_steps", "must be at least 1"));
    }
    formation.check(q0)?;
    let s = formation.num_agents();
    let n = formation.dim();
    let h = params.h();
    let pot = formation.potential();

    let start = init_from_ic(q0, v0, params)?;
    let mut positions = Vec::with_capacity(num_steps + 1);
    let mut energy = Vec::with_capacity(num_steps);
    let mut divergence = None;

    let mut u_prev = pot.potential_raw(q0.as_slice());
    positions.push(q0.clone());
    let mut grad = vec![0.0; s * n];
    let mut next = start.q_curr.into_vec();
    let mut rhs_evals = 0;

    for k in 1..=num_steps {
        if next.iter().any(|x| !x.is_finite()) {
            divergence = Some(k);
            break;
        }
        let u_next = pot.potential_raw(&next);
        let prev = positions.last().expect("q_0 pushed").as_slice();
        let kinetic = sq_dist(prev, &next) / (2.0 * h * h);
        let potential = 0.5 * (u_prev + u_next);
        energy.push(EnergyRecord {
            step: k - 1,
            kinetic,
            potential,
            total: kinetic + potential,
        });
        u_prev = u_next;
        let q_k = Configuration::from_raw(s, n, next);
        if k < num_steps {
            next = advance(prev, q_k.as_slice(), params, formation, &mut grad);
            rhs_evals += 1;
        } else {
            next = Vec::new();
        }
        positions.push(q_k);
    }

    Ok(Trajectory {
        integrator: Integrator::Vi,
        h,
        positions,
        momenta: None,
        energy,
        divergence,
        rhs_evals,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum()
}

fn legendre(
    q0: &Configuration,
    q1: &Configuration,
    params: &ViParams,
    formation: &Formation,
    sign: f64,
) -> Result<MomentumVector> {
    formation.check(q0)?;
    formation.check(q1)?;
    let h = params.h();
    let half_kappa = 0.5 * params.kappa();
    // The minus map evaluates the force at the first point, the plus map at
    // the second.
    let at = if sign > 0.0 { q0 } else { q1 };
    let grad = formation.potential().gradient(at)?;
    let p = q0
        .as_slice()
        .iter()
        .zip(q1.as_slice())
        .zip(&grad)
        .map(|((a, b), g)| {
            let d = b - a;
            d / h + sign * (0.5 * h * g + half_kappa * d)
        })
        .collect();
    Ok(MomentumVector(Configuration::from_raw(
        formation.num_agents(),
        formation.dim(),
        p,
    )))
}

/// Pre-momentum at `q0` of the interval `(q0, q1)`:
/// `p = (q1 - q0)/h + h/2 grad U(q0) + kappa/2 (q1 - q0)`.
pub fn discrete_legendre_minus(
    q0: &Configuration,
    q1: &Configuration,
    params: &ViParams,
    formation: &Formation,
) -> Result<MomentumVector> {
    legendre(q0, q1, params, formation, 1.0)
}

/// Post-momentum at `q1` of the interval `(q0, q1)`:
/// `p = (q1 - q0)/h - h/2 grad U(q1) - kappa/2 (q1 - q0)`.
pub fn discrete_legendre_plus(
    q0: &Configuration,
    q1: &Configuration,
    params: &ViParams,
    formation: &Formation,
) -> Result<MomentumVector> {
    legendre(q0, q1, params, formation, -1.0)
}

/// Discrete energy of one interval, per agent and in total.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteEnergy {
    pub per_agent: Vec<f64>,
    pub total: f64,
}

/// `E_i = |q_{k+1}^i - q_k^i|^2 / (2h) + h/4 sum_{j in N_i} (V_ij(q_k) + V_ij(q_{k+1}))`.
///
/// Each agent carries half of every incident edge potential, so the total is
/// `|dq|^2 / (2h) + h/2 (U(q_k) + U(q_{k+1}))` with every edge counted once.
pub fn discrete_energy(
    q_k: &Configuration,
    q_k1: &Configuration,
    params: &ViParams,
    formation: &Formation,
) -> Result<DiscreteEnergy> {
    formation.check(q_k)?;
    formation.check(q_k1)?;
    let h = params.h();
    let graph: &FormationGraph = formation.graph();
    let pot = formation.potential();
    let mut per_agent = Vec::with_capacity(graph.num_agents());
    for i in 0..graph.num_agents() {
        let mut e = sq_dist(q_k.agent(i), q_k1.agent(i)) / (2.0 * h);
        for &j in graph.neighbors(i)? {
            let v0 = pot.eval_pair(i, j, q_k.agent(i), q_k.agent(j))?;
            let v1 = pot.eval_pair(i, j, q_k1.agent(i), q_k1.agent(j))?;
            e += 0.25 * h * (v0 + v1);
        }
        per_agent.push(e);
    }
    let total = per_agent.iter().sum();
    Ok(DiscreteEnergy { per_agent, total })
}
