//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::fs;
use std::time::{Duration, Instant};

use formation_vi::presets::{hex_wheel, random_box, unit_square, Preset};
use formation_vi::roa::{run_sample, run_sweep_to_dir};
use formation_vi::*;
use formation_vi_cli::{cmd_alpha, AlphaArgs};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

fn report(id: &str, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} {id:>2} {name}: {} [{:.2?}]", o.detail, start.elapsed());
    for n in o.notes {
        println!("        {n}");
    }
    o.pass
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn alpha_args() -> AlphaArgs {
    AlphaArgs {
        radius: 1.0,
        momentum_bound: 1.0,
        kappa: 0.5,
        num_agents: 7,
        num_edges: 11,
        max_distance: 1.0,
        h: None,
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let a = cmd_alpha(&alpha_args()).expect("alpha");
    let t = start.elapsed();
    let pass = (0.0135..=0.0145).contains(&a.alpha) && within(t, 1.0);
    Outcome {
        pass,
        detail: format!(
            "alpha = {:.6} (M = {:.4}, rounds to {}) within [0.0135, 0.0145]; runtime {:.2?} < 1 s",
            a.alpha, a.m, a.alpha_rounded, t
        ),
        notes: vec![],
    }
}

const SQUARE_SEED: u64 = 0;
const SQUARE_HALF_WIDTH: f64 = 3.0;

fn square_start() -> (Preset, Configuration, Configuration) {
    let p = unit_square(PotentialKind::DistanceBased);
    let q0 = random_box(4, 2, None, SQUARE_HALF_WIDTH, SQUARE_SEED).unwrap();
    (p, q0, Configuration::zeros(4, 2))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (sq, q0, v0) = square_start();
    let f = &sq.formation;
    let vi = simulate(Integrator::Vi, &q0, &v0, 0.005, 5.0, f, 200).unwrap();
    let euler = simulate(Integrator::Euler, &q0, &v0, 0.005, 5.0, f, 200).unwrap();
    let fine = integrate_final(Integrator::Euler, &q0, &v0, 0.00005, 5.0, f, 20_000).unwrap();

    let e = vi.total_energy();
    let audit = audit_energy(&e, 1e-12 * e[0]).unwrap();
    let b = max_distance_discrepancy(vi.last(), &sq.desired).unwrap();
    let c = if euler.diverged() {
        f64::INFINITY
    } else {
        max_distance_discrepancy(euler.last(), vi.last()).unwrap()
    };
    let d = max_distance_discrepancy(&fine.q, vi.last()).unwrap();
    let t = start.elapsed();
    let parts = [
        audit.is_monotone(),
        b <= 0.01,
        c > 0.01,
        d <= 0.01,
        within(t, 30.0),
    ];
    let mark = |ok: bool| if ok { "ok" } else { "FAILED" };

    // Same start run ten times longer, for context only.
    let long = simulate(Integrator::Vi, &q0, &v0, 0.005, 5.0, f, 2000).unwrap();
    let b_long = max_distance_discrepancy(long.last(), &sq.desired).unwrap();
    Outcome {
        pass: parts.iter().all(|x| *x),
        detail: format!(
            "(a) energy non-increasing, max step increase {:.3e} [{}]; (b) VI vs square {:.4} <= 0.01 [{}]; \
             (c) Euler@0.005 vs VI {:.4} > 0.01 [{}]; (d) Euler@0.00005 vs VI {:.5} <= 0.01 [{}]; runtime < 30 s [{}]",
            audit.max_increase,
            mark(parts[0]),
            b,
            mark(parts[1]),
            c,
            mark(parts[2]),
            d,
            mark(parts[3]),
            mark(parts[4]),
        ),
        notes: vec![
            format!("start: rest, uniform in [-{SQUARE_HALF_WIDTH}, {SQUARE_HALF_WIDTH}]^2 per agent, seed {SQUARE_SEED}; horizon 1 s"),
            format!("info: the same VI run after 10 s is at discrepancy {b_long:.4} from the square; the slowest shape mode decays at about 0.33/s"),
        ],
    }
}

/// Random formation with at most `max_agents` agents in the plane.
fn random_formation(rng: &mut ChaCha8Rng, max_agents: usize) -> (Formation, Configuration) {
    let s = rng.gen_range(2..=max_agents);
    let mut edges: Vec<(usize, usize)> = (0..s - 1).map(|i| (i, i + 1)).collect();
    for _ in 0..rng.gen_range(0..s) {
        let (i, j) = (rng.gen_range(0..s), rng.gen_range(0..s));
        if i != j {
            edges.push((i, j));
        }
    }
    let kind = if rng.gen_bool(0.5) {
        PotentialKind::DistanceBased
    } else {
        PotentialKind::DisplacementBased
    };
    let desired = Configuration::new(s, 2, (0..2 * s).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
    let g = FormationGraph::new(s, 2, edges).unwrap();
    let p = PotentialSpec::from_desired(kind, &g, &desired).unwrap();
    (Formation::new(g, p).unwrap(), desired)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let (mut accepted, mut redrawn) = (0, 0);
    while accepted < 50 {
        let (f, _) = random_formation(&mut rng, 5);
        let s = f.num_agents();
        let q0 = Configuration::new(s, 2, (0..2 * s).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
        let v0 = Configuration::new(s, 2, (0..2 * s).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let h = rng.gen_range(0.001..=0.05);
        let params = ViParams::new(h, rng.gen_range(0.1..2.0)).unwrap();
        let t = run_vi(&q0, &v0, &params, &f, 100).unwrap();
        let bounded = !t.diverged()
            && t.positions.iter().all(|q| q.as_slice().iter().all(|x| x.abs() <= 10.0));
        if !bounded {
            redrawn += 1;
            continue;
        }
        accepted += 1;
        for w in t.positions.windows(3) {
            let plus = discrete_legendre_plus(&w[0], &w[1], &params, &f).unwrap();
            let minus = discrete_legendre_minus(&w[1], &w[2], &params, &f).unwrap();
            for (a, b) in plus.as_slice().iter().zip(minus.as_slice()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= 1e-10 && within(t, 10.0),
        detail: format!("max |p+ - p-| = {worst:.3e} <= 1e-10 over 50 trajectories; runtime < 10 s"),
        notes: vec![format!("{redrawn} draws left the |q| <= 10 box and were replaced")],
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = [0.0f64; 2];
    for (slot, kind) in [PotentialKind::DistanceBased, PotentialKind::DisplacementBased].into_iter().enumerate() {
        let mut done = 0;
        while done < 100 {
            let (f, _) = random_formation(&mut rng, 6);
            if f.potential().kind() != kind {
                continue;
            }
            done += 1;
            let s = f.num_agents();
            let q: Vec<f64> = (0..2 * s).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let pot = f.potential();
            let g = pot.gradient(&Configuration::new(s, 2, q.clone()).unwrap()).unwrap();
            let mut diff2 = 0.0;
            for k in 0..q.len() {
                let (mut up, mut down) = (q.clone(), q.clone());
                up[k] += 1e-6;
                down[k] -= 1e-6;
                let fu = pot.total_potential(&Configuration::new(s, 2, up).unwrap()).unwrap();
                let fd = pot.total_potential(&Configuration::new(s, 2, down).unwrap()).unwrap();
                let fdg = (fu - fd) / 2e-6;
                diff2 += (g[k] - fdg).powi(2);
            }
            let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            worst[slot] = worst[slot].max(diff2.sqrt() / gn.max(f64::MIN_POSITIVE));
        }
    }
    let t = start.elapsed();
    Outcome {
        pass: worst.iter().all(|w| *w <= 1e-6) && within(t, 5.0),
        detail: format!(
            "worst relative error distance-based {:.2e}, displacement-based {:.2e} (<= 1e-6, 100 inputs each); runtime < 5 s",
            worst[0], worst[1]
        ),
        notes: vec![],
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cases: Vec<Preset> = Vec::new();
    for kind in [PotentialKind::DistanceBased, PotentialKind::DisplacementBased] {
        cases.push(unit_square(kind));
        cases.push(hex_wheel(kind, 1.0).unwrap());
    }
    for _ in 0..8 {
        let (formation, desired) = random_formation(&mut rng, 6);
        cases.push(Preset { formation, desired });
    }
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for p in &cases {
        let g = p.formation.potential().gradient(&p.desired).unwrap();
        if g.iter().any(|x| *x != 0.0) {
            continue;
        }
        checked += 1;
        let (s, n) = (p.desired.num_agents(), p.desired.dim());
        let params = ViParams::new(0.01, 0.5).unwrap();
        let mut state = init_from_ic(&p.desired, &Configuration::zeros(s, n), &params).unwrap();
        for _ in 0..1000 {
            state = vi_step(&state, &params, &p.formation).unwrap();
            for (a, b) in state.q_curr.as_slice().iter().zip(p.desired.as_slice()) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    Outcome {
        pass: worst <= f64::EPSILON && checked >= 4,
        detail: format!("{checked} zero-gradient shapes, max drift over 1000 steps {worst:.1e} <= machine epsilon"),
        notes: vec![],
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = [0.0f64; 2];
    let mut counts = [0; 2];
    while counts.iter().any(|c| *c < 20) {
        let (f, _) = random_formation(&mut rng, 5);
        let slot = match f.potential().kind() {
            PotentialKind::DistanceBased => 0,
            PotentialKind::DisplacementBased => 1,
        };
        if counts[slot] >= 20 {
            continue;
        }
        let s = f.num_agents();
        let q0 = Configuration::new(s, 2, (0..2 * s).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let v0 = Configuration::new(s, 2, (0..2 * s).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let params = ViParams::new(rng.gen_range(0.001..0.02), rng.gen_range(0.1..5.0)).unwrap();
        let t = run_vi(&q0, &v0, &params, &f, 200).unwrap();
        if t.diverged() {
            continue;
        }
        counts[slot] += 1;
        let (a, b) = (params.kappa_h(), params.current_weight());
        let c: Vec<Vec<f64>> = t.positions.iter().map(|q| q.centroid()).collect();
        for k in 1..c.len() - 1 {
            for d in 0..2 {
                worst[slot] = worst[slot].max((c[k + 1][d] - (a * c[k - 1][d] + b * c[k][d])).abs());
            }
        }
    }
    Outcome {
        pass: worst.iter().all(|w| *w <= 1e-12),
        detail: format!(
            "max residual distance-based {:.1e}, displacement-based {:.1e} (<= 1e-12, 20 trajectories each)",
            worst[0], worst[1]
        ),
        notes: vec!["recursion c_(k+1) = kappa_h c_(k-1) + (1 - kappa_h) c_k with the implemented coefficients".into()],
    }
}

fn pair_problem() -> (Formation, Configuration, Configuration, Configuration) {
    let g = FormationGraph::new(2, 2, [(0, 1)]).unwrap();
    let p = PotentialSpec::displacement_based(&g, &[vec![1.0, 0.0]]).unwrap();
    let f = Formation::new(g, p).unwrap();
    let q0 = Configuration::from_rows(&[[1.3, 0.2], [0.0, 0.0]]).unwrap();
    // kappa = 1: zero initial acceleration means v0 = -grad U(q0).
    let grad = f.potential().gradient(&q0).unwrap();
    let v0 = Configuration::new(2, 2, grad.iter().map(|x| -x).collect()).unwrap();
    let generic = Configuration::from_rows(&[[0.3, -0.4], [0.0, 0.0]]).unwrap();
    (f, q0, v0, generic)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (f, q0, v0, generic) = pair_problem();
    let hs = [4e-3, 2e-3, 1e-3, 5e-4];
    let coarse = [0.1, 0.05, 0.025, 0.0125];
    let est = |method, v: &Configuration, list: &[f64]| {
        let problem = OrderProblem {
            formation: &f,
            q0: &q0,
            v0: v,
            kappa: 1.0,
            method,
        };
        estimate_order(&problem, list, 1.0).unwrap()
    };
    let vi = est(Integrator::Vi, &v0, &hs);
    let euler = est(Integrator::Euler, &v0, &hs);
    let rk4 = est(Integrator::Rk4, &v0, &coarse);
    let vi_generic = est(Integrator::Vi, &generic, &hs);
    let t = start.elapsed();
    let ok_vi = vi.slope >= 1.0;
    let ok_euler = (euler.slope - 1.0).abs() <= 0.2;
    let ok_rk4 = (rk4.slope - 4.0).abs() <= 0.5;
    Outcome {
        pass: ok_vi && ok_euler && ok_rk4 && within(t, 60.0),
        detail: format!(
            "VI slope {:.4} >= 1.0; Euler {:.4} in 1.0 +- 0.2; RK4 {:.4} in 4.0 +- 0.5; runtime < 60 s",
            vi.slope, euler.slope, rk4.slope
        ),
        notes: vec![
            format!("reference RK4 at h = {:e} over T = 1; start q0 = [[1.3, 0.2], [0, 0]] with zero initial acceleration", vi.reference_h),
            format!("RK4 check uses h in {coarse:?} (reference h = {:e}); on the VI list its error is at round-off", rk4.reference_h),
            format!("info: with the generic velocity [[0.3, -0.4], [0, 0]] the VI slope is {:.4}", vi_generic.slope),
            format!("VI errors: {}", vi.errors.iter().map(|(h, e)| format!("{h:e}: {e:.3e}")).collect::<Vec<_>>().join(", ")),
        ],
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let (sq, q0, v0) = square_start();
    let worst = |h: f64, n: usize| {
        let params = ViParams::new(h, 5.0).unwrap();
        let t = run_vi(&q0, &v0, &params, &sq.formation, n).unwrap();
        dissipation_rate_error(&t, &params, &sq.formation).unwrap().into_iter().fold(0.0, f64::max)
    };
    let (e2, e1) = (worst(2e-3, 500), worst(1e-3, 1000));
    let ratio = e2 / e1;
    let t = start.elapsed();
    Outcome {
        pass: (1.5..=3.0).contains(&ratio) && within(t, 10.0),
        detail: format!(
            "max rate gap {e2:.4e} at h = 2e-3, {e1:.4e} at h = 1e-3, reduction factor {ratio:.4} in [1.5, 3]; runtime < 10 s"
        ),
        notes: vec!["square setup of criterion 2 over 1 s".into()],
    }
}

fn wheel_roa_config(h: f64, steps: usize) -> (RoaConfig, Formation) {
    let w = hex_wheel(PotentialKind::DistanceBased, 1.0).unwrap();
    let agent = 0;
    let c = w.desired.agent(agent).to_vec();
    let r = 0.05 / 2f64.sqrt();
    let cfg = RoaConfig {
        desired: w.desired.clone(),
        displaced_agent: agent,
        sampling: Sampling::Grid {
            lower: c.iter().map(|x| x - r).collect(),
            upper: c.iter().map(|x| x + r).collect(),
            resolution: 10,
        },
        h,
        kappa: 0.5,
        max_steps: steps,
        rel_tol: 0.01,
        vel_threshold: 0.1,
        seed: 0,
    };
    (cfg, w.formation)
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let (cfg, f) = wheel_roa_config(0.014, 200);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (out, files_a) = run_sweep_to_dir(&cfg, &f, a.path(), Some(4)).unwrap();
    let (_, files_b) = run_sweep_to_dir(&cfg, &f, b.path(), Some(4)).unwrap();
    let congruent = out
        .iter()
        .filter(|o| o.classification == Classification::ConvergedCongruent)
        .count();
    let identical = fs::read(&files_a.table).unwrap() == fs::read(&files_b.table).unwrap();

    let (half, _) = wheel_roa_config(0.007, 400);
    let pool: Vec<&RoaOutcome> = out
        .iter()
        .filter(|o| o.classification == Classification::ConvergedCongruent)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let picks = sample(&mut rng, pool.len(), 20.min(pool.len()));
    let agree = picks
        .iter()
        .filter(|&i| run_sample(&half, &f, &pool[i].point).unwrap().classification == pool[i].classification)
        .count();
    let t = start.elapsed();
    Outcome {
        pass: congruent == 100 && identical && agree == 20 && within(t, 120.0),
        detail: format!(
            "{congruent}/100 converged congruent; rerun byte-identical: {identical}; {agree}/20 re-classified identically at h/2; runtime < 2 min on 4 workers"
        ),
        notes: vec!["7-agent wheel (hub + hexagon, 11 edges), hub displaced within radius 0.05".into()],
    }
}

fn criterion_10() -> Outcome {
    let alpha = cmd_alpha(&alpha_args()).unwrap().alpha;
    let h = 0.014;
    let strict = max_guaranteed_steps(h, alpha);
    let w = hex_wheel(PotentialKind::DistanceBased, 1.0).unwrap();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let audit_run = |h: f64, steps: usize, seed: u64| {
        let q0 = random_box(7, 2, Some(&w.desired), half, seed).unwrap();
        let params = ViParams::new(h, 0.5).unwrap();
        let t = run_vi(&q0, &Configuration::zeros(7, 2), &params, &w.formation, steps).unwrap();
        let e = t.total_energy();
        let a = audit_energy(&e, 1e-12 * e[0]).unwrap();
        (a.violations.len(), a.max_increase / e[0])
    };
    let rounded_steps = max_guaranteed_steps(h, 0.014).unwrap() as usize;
    let strict_steps = max_guaranteed_steps(alpha, alpha).unwrap() as usize;
    let (v_rounded, _) = audit_run(h, rounded_steps, 0);
    let (v_strict, _) = audit_run(alpha, strict_steps, 0);

    let mut scan_bad = 0;
    let mut scan_worst: f64 = 0.0;
    for seed in 0..200 {
        let (v, inc) = audit_run(h, rounded_steps, seed);
        if v > 0 {
            scan_bad += 1;
            scan_worst = scan_worst.max(inc);
        }
    }
    Outcome {
        pass: v_rounded == 0 && v_strict == 0,
        detail: format!(
            "h = 0.014 with alpha rounded to 0.014: {rounded_steps} steps, {v_rounded} violations; h = alpha = {alpha:.6}: {strict_steps} steps, {v_strict} violations"
        ),
        notes: vec![
            format!(
                "with the unrounded alpha, h = 0.014 is outside the guarantee: {}",
                match strict {
                    Ok(k) => format!("{k} steps"),
                    Err(e) => e.to_string(),
                }
            ),
            "start: rest, every coordinate within 1/sqrt(2) of the wheel shape (agents within R = 1), seed 0".into(),
            format!(
                "info: over 200 seeds, {scan_bad} starts show a first-interval increase, largest {scan_worst:.2e} E0"
            ),
        ],
    }
}

fn main() {
    let results = [
        report("1", "alpha reproduction", criterion_1),
        report("2", "square experiment", criterion_2),
        report("3", "momentum matching", criterion_3),
        report("4", "gradient consistency", criterion_4),
        report("5", "fixed-point exactness", criterion_5),
        report("6", "centroid recursion", criterion_6),
        report("7", "convergence order", criterion_7),
        report("8", "dissipation-rate consistency", criterion_8),
        report("9", "region of attraction, desk scale", criterion_9),
        report("10", "energy guarantee window", criterion_10),
    ];
    let passed = results.iter().filter(|x| **x).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
