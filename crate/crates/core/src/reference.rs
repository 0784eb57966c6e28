//! Classical one-step integrators for the first-order damped dynamics
//!
//! ```text
//! qdot_i = p_i,    pdot_i = -kappa p_i - sum_{j in N_i} grad_{q_i} V_ij
//! ```
//!
//! used as baselines and as refined-reference oracles for the variational
//! integrator.

use crate::error::{Error, Result};
use crate::graph::Configuration;
use crate::system::Formation;
use crate::trajectory::{EnergyRecord, Integrator, Trajectory};

/// Positions and momenta (equal to velocities for unit masses).
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderState {
    pub q: Configuration,
    pub p: Configuration,
}

impl FirstOrderState {
    pub fn new(q: Configuration, p: Configuration) -> Result<Self> {
        p.check_matches(q.num_agents(), q.dim())?;
        Ok(Self { q, p })
    }

    /// `1/2 |p|^2 + U(q)`.
    pub fn hamiltonian(&self, formation: &Formation) -> Result<f64> {
        Ok(kinetic(self.p.as_slice()) + formation.potential().total_potential(&self.q)?)
    }
}

fn kinetic(p: &[f64]) -> f64 {
    0.5 * p.iter().map(|x| x * x).sum::<f64>()
}

/// Raw right-hand side on stacked `[q | p]` slices.
struct Rhs<'a> {
    formation: &'a Formation,
    kappa: f64,
    grad: Vec<f64>,
}

impl Rhs<'_> {
    fn eval(&mut self, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        self.formation.potential().gradient_into(q, &mut self.grad);
        dq.copy_from_slice(p);
        for ((d, pi), g) in dp.iter_mut().zip(p).zip(&self.grad) {
            *d = -self.kappa * pi - g;
        }
    }
}

/// Time derivative `(qdot, pdot)` of `state`.
pub fn rhs(state: &FirstOrderState, kappa: f64, formation: &Formation) -> Result<FirstOrderState> {
    formation.check(&state.q)?;
    formation.check(&state.p)?;
    let len = state.q.as_slice().len();
    let mut f = Rhs {
        formation,
        kappa,
        grad: vec![0.0; len],
    };
    let mut dq = vec![0.0; len];
    let mut dp = vec![0.0; len];
    f.eval(state.q.as_slice(), state.p.as_slice(), &mut dq, &mut dp);
    let (s, n) = (formation.num_agents(), formation.dim());
    Ok(FirstOrderState {
        q: Configuration::from_raw(s, n, dq),
        p: Configuration::from_raw(s, n, dp),
    })
}

/// Working buffers for repeated one-step updates.
struct Stepper<'a> {
    rhs: Rhs<'a>,
    k: [(Vec<f64>, Vec<f64>); 4],
    tmp_q: Vec<f64>,
    tmp_p: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(formation: &'a Formation, kappa: f64) -> Self {
        let len = formation.num_agents() * formation.dim();
        let z = || (vec![0.0; len], vec![0.0; len]);
        Self {
            rhs: Rhs {
                formation,
                kappa,
                grad: vec![0.0; len],
            },
            k: [z(), z(), z(), z()],
            tmp_q: vec![0.0; len],
            tmp_p: vec![0.0; len],
        }
    }

    fn euler(&mut self, q: &mut [f64], p: &mut [f64], h: f64) {
        let (dq, dp) = &mut self.k[0];
        self.rhs.eval(q, p, dq, dp);
        axpy(q, h, dq);
        axpy(p, h, dp);
    }

    fn rk4(&mut self, q: &mut [f64], p: &mut [f64], h: f64) {
        let stages = [0.0, 0.5 * h, 0.5 * h, h];
        for s in 0..4 {
            if s == 0 {
                self.tmp_q.copy_from_slice(q);
                self.tmp_p.copy_from_slice(p);
            } else {
                let (pq, pp) = &self.k[s - 1];
                for i in 0..q.len() {
                    self.tmp_q[i] = q[i] + stages[s] * pq[i];
                    self.tmp_p[i] = p[i] + stages[s] * pp[i];
                }
            }
            let (dq, dp) = &mut self.k[s];
            self.rhs.eval(&self.tmp_q, &self.tmp_p, dq, dp);
        }
        let w = h / 6.0;
        for i in 0..q.len() {
            q[i] += w * (self.k[0].0[i] + 2.0 * self.k[1].0[i] + 2.0 * self.k[2].0[i] + self.k[3].0[i]);
            p[i] += w * (self.k[0].1[i] + 2.0 * self.k[1].1[i] + 2.0 * self.k[2].1[i] + self.k[3].1[i]);
        }
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

fn one_step(
    method: Integrator,
    state: &FirstOrderState,
    h: f64,
    kappa: f64,
    formation: &Formation,
) -> Result<FirstOrderState> {
    check_h(h)?;
    formation.check(&state.q)?;
    formation.check(&state.p)?;
    let mut q = state.q.as_slice().to_vec();
    let mut p = state.p.as_slice().to_vec();
    let mut st = Stepper::new(formation, kappa);
    match method {
        Integrator::Euler => st.euler(&mut q, &mut p, h),
        Integrator::Rk4 => st.rk4(&mut q, &mut p, h),
        Integrator::Vi => unreachable!("not a one-step method"),
    }
    if q.iter().chain(&p).any(|x| !x.is_finite()) {
        return Err(Error::Diverged { step: 1 });
    }
    let (s, n) = (formation.num_agents(), formation.dim());
    Ok(FirstOrderState {
        q: Configuration::from_raw(s, n, q),
        p: Configuration::from_raw(s, n, p),
    })
}

fn check_h(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid("h", format!("must be positive, got {h}")));
    }
    Ok(())
}

/// `x + h f(x)`.
pub fn euler_step(
    state: &FirstOrderState,
    h: f64,
    kappa: f64,
    formation: &Formation,
) -> Result<FirstOrderState> {
    one_step(Integrator::Euler, state, h, kappa, formation)
}

/// Classical four-stage Runge-Kutta update.
pub fn rk4_step(
    state: &FirstOrderState,
    h: f64,
    kappa: f64,
    formation: &Formation,
) -> Result<FirstOrderState> {
    one_step(Integrator::Rk4, state, h, kappa, formation)
}

/// Runs Euler or RK4 for `num_steps` steps from rest-or-moving initial data,
/// recording positions, momenta and the Hamiltonian at every step.
pub fn run_reference(
    method: Integrator,
    q0: &Configuration,
    v0: &Configuration,
    h: f64,
    kappa: f64,
    formation: &Formation,
    num_steps: usize,
) -> Result<Trajectory> {
    if method == Integrator::Vi {
        return Err(Error::invalid("method", "use run_vi for the variational integrator"));
    }
    run_reference_inner(method, q0, v0, h, kappa, formation, num_steps, true)
}

/// Same integration as [`run_reference`] keeping only the final state.
pub fn integrate_final(
    method: Integrator,
    q0: &Configuration,
    v0: &Configuration,
    h: f64,
    kappa: f64,
    formation: &Formation,
    num_steps: usize,
) -> Result<FirstOrderState> {
    if method == Integrator::Vi {
        return Err(Error::invalid("method", "use run_vi for the variational integrator"));
    }
    let t = run_reference_inner(method, q0, v0, h, kappa, formation, num_steps, false)?;
    if let Some(step) = t.divergence {
        return Err(Error::Diverged { step });
    }
    let q = t.positions.into_iter().last().expect("final state");
    let p = t.momenta.and_then(|m| m.into_iter().last()).expect("final momentum");
    Ok(FirstOrderState { q, p })
}

#[allow(clippy::too_many_arguments)]
fn run_reference_inner(
    method: Integrator,
    q0: &Configuration,
    v0: &Configuration,
    h: f64,
    kappa: f64,
    formation: &Formation,
    num_steps: usize,
    record: bool,
) -> Result<Trajectory> {
    check_h(h)?;
    if num_steps == 0 {
        return Err(Error::invalid("num_steps", "must be at least 1"));
    }
    formation.check(q0)?;
    formation.check(v0)?;
    let (s, n) = (formation.num_agents(), formation.dim());
    let pot = formation.potential();
    let mut q = q0.as_slice().to_vec();
    let mut p = v0.as_slice().to_vec();
    let energy_at = |step: usize, q: &[f64], p: &[f64]| {
        let kinetic = kinetic(p);
        let potential = pot.potential_raw(q);
        EnergyRecord {
            step,
            kinetic,
            potential,
            total: kinetic + potential,
        }
    };

    let cap = if record { num_steps + 1 } else { 1 };
    let mut positions = Vec::with_capacity(cap);
    let mut momenta = Vec::with_capacity(cap);
    let mut energy = Vec::with_capacity(cap);
    positions.push(q0.clone());
    momenta.push(v0.clone());
    energy.push(energy_at(0, &q, &p));

    let mut st = Stepper::new(formation, kappa);
    let mut divergence = None;
    let mut rhs_evals = 0;
    for k in 1..=num_steps {
        match method {
            Integrator::Euler => st.euler(&mut q, &mut p, h),
            Integrator::Rk4 => st.rk4(&mut q, &mut p, h),
            Integrator::Vi => unreachable!(),
        }
        rhs_evals += method.rhs_evals_per_step();
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            divergence = Some(k);
            break;
        }
        if record || k == num_steps {
            if !record {
                positions.clear();
                momenta.clear();
                energy.clear();
            }
            positions.push(Configuration::from_raw(s, n, q.clone()));
            momenta.push(Configuration::from_raw(s, n, p.clone()));
            energy.push(energy_at(k, &q, &p));
        }
    }

    Ok(Trajectory {
        integrator: method,
        h,
        positions,
        momenta: Some(momenta),
        energy,
        divergence,
        rhs_evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FormationGraph;
    use crate::potential::{PotentialKind, PotentialSpec};
    use approx::assert_relative_eq;

    fn free_agent() -> Formation {
        let g = FormationGraph::new(1, 2, []).unwrap();
        let p = PotentialSpec::distance_based(&g, &[]).unwrap();
        Formation::new(g, p).unwrap()
    }

    fn pt(x: f64, y: f64) -> Configuration {
        Configuration::from_rows(&[[x, y]]).unwrap()
    }

    fn square() -> (Formation, Configuration) {
        let g = FormationGraph::new(4, 2, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let sq = Configuration::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
            .unwrap();
        let p = PotentialSpec::from_desired(PotentialKind::DistanceBased, &g, &sq).unwrap();
        (Formation::new(g, p).unwrap(), sq)
    }

    #[test]
    fn rhs_free_agent() {
        let f = free_agent();
        let s = FirstOrderState::new(pt(0.0, 0.0), pt(1.0, 0.0)).unwrap();
        let d = rhs(&s, 5.0, &f).unwrap();
        assert_eq!(d.q.as_slice(), &[1.0, 0.0]);
        assert_eq!(d.p.as_slice(), &[-5.0, 0.0]);
    }

    #[test]
    fn rhs_zero_at_rest_equilibrium() {
        let (f, sq) = square();
        let s = FirstOrderState::new(sq.clone(), Configuration::zeros(4, 2)).unwrap();
        let d = rhs(&s, 5.0, &f).unwrap();
        assert!(d.q.as_slice().iter().chain(d.p.as_slice()).all(|x| *x == 0.0));
        assert_eq!(euler_step(&s, 0.1, 5.0, &f).unwrap(), s);
        assert_eq!(rk4_step(&s, 0.1, 5.0, &f).unwrap(), s);
    }

    #[test]
    fn euler_free_agent() {
        let f = free_agent();
        let s = FirstOrderState::new(pt(0.0, 0.0), pt(1.0, 0.0)).unwrap();
        let n = euler_step(&s, 0.1, 5.0, &f).unwrap();
        assert_relative_eq!(n.p.as_slice()[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(n.q.as_slice()[0], 0.1, max_relative = 1e-15);
    }

    #[test]
    fn rk4_exponential_decay() {
        let f = free_agent();
        let s = FirstOrderState::new(pt(0.0, 0.0), pt(1.0, 0.0)).unwrap();
        let n = rk4_step(&s, 0.1, 1.0, &f).unwrap();
        assert!((n.p.as_slice()[0] - (-0.1f64).exp()).abs() < 1e-7);
        // q(t) = 1 - e^{-t}
        assert!((n.q.as_slice()[0] - (1.0 - (-0.1f64).exp())).abs() < 1e-7);
    }

    #[test]
    fn nonpositive_step_rejected() {
        let f = free_agent();
        let s = FirstOrderState::new(pt(0.0, 0.0), pt(1.0, 0.0)).unwrap();
        assert!(euler_step(&s, 0.0, 1.0, &f).is_err());
        assert!(rk4_step(&s, -1.0, 1.0, &f).is_err());
    }

    #[test]
    fn rk4_cost_accounting_and_rest() {
        let (f, sq) = square();
        for method in [Integrator::Euler, Integrator::Rk4] {
            let t = run_reference(method, &sq, &Configuration::zeros(4, 2), 0.01, 5.0, &f, 25)
                .unwrap();
            assert_eq!(t.rhs_evals, 25 * method.rhs_evals_per_step());
            assert!(t.positions.iter().all(|q| *q == sq));
            assert!(t.energy.iter().all(|e| e.total == 0.0));
        }
    }

    #[test]
    fn euler_divergence_flagged() {
        let (f, _) = square();
        let q0 = Configuration::from_rows(&[[0.0, 0.0], [5.0, 0.0], [5.0, 5.0], [0.0, 5.0]])
            .unwrap();
        let t = run_reference(Integrator::Euler, &q0, &Configuration::zeros(4, 2), 0.5, 5.0, &f, 500)
            .unwrap();
        assert!(t.divergence.is_some());
        assert!(integrate_final(Integrator::Euler, &q0, &Configuration::zeros(4, 2), 0.5, 5.0, &f, 500).is_err());
    }

    #[test]
    fn final_only_matches_recorded() {
        let (f, _) = square();
        let q0 = Configuration::from_rows(&[[0.1, 0.0], [1.2, 0.0], [0.9, 1.1], [0.0, 0.8]])
            .unwrap();
        let v0 = Configuration::zeros(4, 2);
        let full = run_reference(Integrator::Rk4, &q0, &v0, 0.01, 2.0, &f, 40).unwrap();
        let last = integrate_final(Integrator::Rk4, &q0, &v0, 0.01, 2.0, &f, 40).unwrap();
        assert_eq!(&last.q, full.last());
    }
}
