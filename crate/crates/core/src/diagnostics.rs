//! Step-size guarantees and energy diagnostics for the variational integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Configuration;
use crate::reference::integrate_final;
use crate::system::Formation;
use crate::trajectory::{Integrator, Trajectory};
use crate::vi::{discrete_legendre_minus, run_vi, ViParams};

/// Inputs to the conservative step-size bound for distance-based formations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaInputs {
    /// Radius `R` of the neighbourhood the flow must stay in.
    pub radius: f64,
    /// Momentum bound `c` with `|p| < c`.
    pub momentum_bound: f64,
    pub kappa: f64,
    pub num_agents: usize,
    pub num_edges: usize,
    /// Largest desired inter-agent distance over the edges.
    pub max_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    /// Bound on the vector field norm over the compact set.
    pub m: f64,
    pub alpha: f64,
}

impl AlphaInputs {
    fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid("radius", "must be positive"));
        }
        if !(self.momentum_bound.is_finite() && self.momentum_bound > 0.0) {
            return Err(Error::invalid("momentum_bound", "must be positive"));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::invalid("kappa", "must be non-negative"));
        }
        if self.num_agents == 0 {
            return Err(Error::invalid("num_agents", "must be at least 1"));
        }
        if !(self.max_distance.is_finite() && self.max_distance >= 0.0) {
            return Err(Error::invalid("max_distance", "must be non-negative"));
        }
        Ok(())
    }
}

/// `alpha = R / (e M)` with
///
/// ```text
/// M^2 = (1 + 2 |V| kappa^2) c^2 + 64 |E| max(R^6, R^2 max_d^4)
/// ```
///
/// The `max` covers both the stretched (`|q_ij| > d_ij`) and compressed edge
/// regimes at once.
pub fn alpha_bound(inputs: &AlphaInputs) -> Result<AlphaReport> {
    inputs.validate()?;
    let AlphaInputs {
        radius: r,
        momentum_bound: c,
        kappa,
        num_agents,
        num_edges,
        max_distance: d,
    } = *inputs;
    let damping = (1.0 + 2.0 * num_agents as f64 * kappa * kappa) * c * c;
    let stretch = r.powi(6).max(r * r * d.powi(4));
    let m = (damping + 64.0 * num_edges as f64 * stretch).sqrt();
    Ok(AlphaReport {
        m,
        alpha: r / (std::f64::consts::E * m),
    })
}

/// Number of steps `k` for which `k h <= exp(alpha / (2h))` holds:
/// `floor(exp(alpha / (2h)) / h)`, saturating at `u64::MAX`.
pub fn max_guaranteed_steps(h: f64, alpha: f64) -> Result<u64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid("h", "must be positive"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be positive"));
    }
    if h > alpha {
        return Err(Error::GuaranteeViolated { h, alpha });
    }
    let k = ((alpha / (2.0 * h)).exp() / h).floor();
    Ok(if k >= u64::MAX as f64 { u64::MAX } else { k as u64 })
}

/// Per-step energy increases beyond a slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub values: Vec<f64>,
    /// `(k, E_{k+1} - E_k)` for every step whose increase exceeds the slack.
    pub violations: Vec<(usize, f64)>,
    /// Largest `E_{k+1} - E_k` over the series (may be negative).
    pub max_increase: f64,
}

impl EnergyAudit {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn audit_energy(series: &[f64], slack: f64) -> Result<EnergyAudit> {
    if series.len() < 2 {
        return Err(Error::invalid("series", "needs at least two values"));
    }
    let mut violations = Vec::new();
    let mut max_increase = f64::NEG_INFINITY;
    for (k, w) in series.windows(2).enumerate() {
        let d = w[1] - w[0];
        max_increase = max_increase.max(d);
        if d > slack || d.is_nan() {
            violations.push((k, d));
        }
    }
    Ok(EnergyAudit {
        values: series.to_vec(),
        violations,
        max_increase,
    })
}

/// Per-step gap between the discrete dissipation rate and `-kappa |p|^2`.
///
/// The rate is `(E_{k+1} - E_k) / h` with `E_k` the energy of interval `k`
/// (in physical units, as stored in the trajectory), and `p` is the
/// pre-momentum of the same interval `k`.
pub fn dissipation_rate_error(
    trajectory: &Trajectory,
    params: &ViParams,
    formation: &Formation,
) -> Result<Vec<f64>> {
    if trajectory.integrator != Integrator::Vi {
        return Err(Error::invalid(
            "trajectory",
            "dissipation rate is defined for variational-integrator runs",
        ));
    }
    let h = params.h();
    let e = &trajectory.energy;
    let q = &trajectory.positions;
    let mut out = Vec::with_capacity(e.len().saturating_sub(1));
    for k in 0..e.len().saturating_sub(1) {
        let rate = (e[k + 1].total - e[k].total) / h;
        let p = discrete_legendre_minus(&q[k], &q[k + 1], params, formation)?;
        out.push((rate + params.kappa() * p.norm_sq()).abs());
    }
    Ok(out)
}

/// Initial value problem used for empirical order estimation.
#[derive(Debug, Clone)]
pub struct OrderProblem<'a> {
    pub formation: &'a Formation,
    pub q0: &'a Configuration,
    pub v0: &'a Configuration,
    pub kappa: f64,
    pub method: Integrator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub method: Integrator,
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub slope: f64,
    /// `(h, max-abs position error at the horizon)`.
    pub errors: Vec<(f64, f64)>,
    pub reference_h: f64,
    pub horizon: f64,
}

/// Global error at `horizon` against an RK4 reference at `min(h_list) / 100`.
pub fn estimate_order(
    problem: &OrderProblem<'_>,
    h_list: &[f64],
    horizon: f64,
) -> Result<OrderEstimate> {
    if h_list.len() < 3 {
        return Err(Error::invalid("h_list", "needs at least three step sizes"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    let mut steps = Vec::with_capacity(h_list.len());
    for &h in h_list {
        steps.push(steps_for(h, horizon)?);
    }
    let h_min = h_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let reference_h = h_min / 100.0;
    let ref_steps = steps_for(reference_h, horizon)?;
    let reference = integrate_final(
        Integrator::Rk4,
        problem.q0,
        problem.v0,
        reference_h,
        problem.kappa,
        problem.formation,
        ref_steps,
    )
    .map_err(|e| Error::invalid("reference", format!("reference run failed: {e}")))?;

    let mut errors = Vec::with_capacity(h_list.len());
    for (&h, &n) in h_list.iter().zip(&steps) {
        let last = match problem.method {
            Integrator::Vi => {
                let params = ViParams::new(h, problem.kappa)?;
                let t = run_vi(problem.q0, problem.v0, &params, problem.formation, n)?;
                if let Some(step) = t.divergence {
                    return Err(Error::Diverged { step });
                }
                t.positions.into_iter().last().expect("final state")
            }
            m => {
                integrate_final(m, problem.q0, problem.v0, h, problem.kappa, problem.formation, n)?
                    .q
            }
        };
        let err = last
            .as_slice()
            .iter()
            .zip(reference.q.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        errors.push((h, err));
    }
    Ok(OrderEstimate {
        method: problem.method,
        slope: loglog_slope(&errors),
        errors,
        reference_h,
        horizon,
    })
}

fn steps_for(h: f64, horizon: f64) -> Result<usize> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid("h_list", "step sizes must be positive"));
    }
    let n = (horizon / h).round();
    if n < 1.0 || ((n * h - horizon) / horizon).abs() > 1e-9 {
        return Err(Error::invalid(
            "h_list",
            format!("step {h} does not divide the horizon {horizon}"),
        ));
    }
    Ok(n as usize)
}

/// Ordinary least-squares slope through `(log x, log y)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
