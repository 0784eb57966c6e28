//! Subcommand implementations. Each writes its tables plus a `run.json`
//! sidecar that echoes the effective configuration.

use std::fs;
use std::path::Path;
use std::time::Instant;

use formation_vi::diagnostics::{alpha_bound, estimate_order, max_guaranteed_steps, OrderProblem};
use formation_vi::roa::{run_sweep_to_dir, summarize};
use formation_vi::{
    max_distance_discrepancy, simulate, AlphaInputs, Classification, Configuration, Integrator,
    OrderEstimate, RoaConfig, Trajectory,
};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, position_header, write_energy, write_json, write_positions, write_table};

pub const METADATA_FILE: &str = "run.json";

/// Sidecar written by every file-producing command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub elapsed_seconds: f64,
    pub summary: serde_json::Value,
}

fn write_metadata(
    out: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    start: Instant,
    summary: serde_json::Value,
) -> CliResult<()> {
    let meta = RunMetadata {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        summary,
    };
    write_json(&out.join(METADATA_FILE), &meta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub integrator: Integrator,
    pub steps_completed: usize,
    pub divergence: Option<usize>,
    pub final_energy: Option<f64>,
    pub rhs_evals: u64,
}

/// Runs the configured integrator and writes `trajectory.csv`,
/// `energy.csv` and `run.json`. Divergence is reported after the partial
/// trajectory is written.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> CliResult<SimulateReport> {
    let start = Instant::now();
    let exp = cfg.build()?;
    fs::create_dir_all(out)?;
    let t = simulate(cfg.integrator, &exp.q0, &exp.v0, cfg.h, cfg.kappa, &exp.formation, cfg.steps)?;
    write_positions(&out.join("trajectory.csv"), cfg.h, &t.positions)?;
    write_energy(&out.join("energy.csv"), &t.energy)?;
    let report = SimulateReport {
        integrator: cfg.integrator,
        steps_completed: t.num_steps(),
        divergence: t.divergence,
        final_energy: t.energy.last().map(|e| e.total),
        rhs_evals: t.rhs_evals,
    };
    write_metadata(out, "simulate", cfg, start, serde_json::to_value(&report)?)?;
    match t.divergence {
        Some(step) => Err(CliError::Diverged { step }),
        None => Ok(report),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub integrator: Integrator,
    pub h: f64,
    pub steps: usize,
    pub rhs_evals: u64,
    pub wall_seconds: f64,
    pub final_energy: f64,
    pub divergence: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// `discrepancy[i][j]`: largest relative pairwise-distance gap of run `i`'s
    /// final shape against run `j`'s.
    pub discrepancy: Vec<Vec<f64>>,
    pub congruent: Vec<Vec<bool>>,
    #[serde(skip)]
    pub finals: Vec<Configuration>,
}

/// Runs every `[[runs]]` entry from the same start and writes
/// `compare.csv`, `finals.csv`, `discrepancy.csv`, `congruence.csv`,
/// `energy_run{k}.csv` and `run.json`.
pub fn cmd_compare(cfg: &ExperimentConfig, out: &Path) -> CliResult<CompareReport> {
    let start = Instant::now();
    if cfg.runs.len() < 2 {
        return Err(CliError::config("runs: compare needs at least two entries"));
    }
    let exp = cfg.build()?;
    fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    let mut finals = Vec::new();
    for (k, run) in cfg.runs.iter().enumerate() {
        let t0 = Instant::now();
        let t = simulate(run.integrator, &exp.q0, &exp.v0, run.h, cfg.kappa, &exp.formation, run.steps)?;
        let wall = t0.elapsed().as_secs_f64();
        write_energy(&out.join(format!("energy_run{k}.csv")), &t.energy)?;
        rows.push(row_for(run, &t, wall));
        finals.push(t.last().clone());
    }
    let n = rows.len();
    let mut discrepancy = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            discrepancy[i][j] = if rows[i].divergence.is_some() || rows[j].divergence.is_some() {
                f64::INFINITY
            } else {
                max_distance_discrepancy(&finals[i], &finals[j])?
            };
        }
    }
    let congruent: Vec<Vec<bool>> = discrepancy
        .iter()
        .map(|r| r.iter().map(|d| *d <= cfg.rel_tol).collect())
        .collect();

    let labels: Vec<String> = rows.iter().map(|r| r.label.clone()).collect();
    let summary_header: Vec<String> = [
        "label",
        "integrator",
        "h",
        "steps",
        "rhs_evals",
        "wall_seconds",
        "final_energy",
        "divergence_step",
    ]
    .map(String::from)
    .to_vec();
    let summary_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.integrator.name().to_string(),
                num(r.h),
                r.steps.to_string(),
                r.rhs_evals.to_string(),
                num(r.wall_seconds),
                num(r.final_energy),
                r.divergence.map_or(String::new(), |s| s.to_string()),
            ]
        })
        .collect();
    write_table(&out.join("compare.csv"), &summary_header, &summary_rows)?;

    let mut final_header = position_header(exp.formation.num_agents(), exp.formation.dim());
    final_header[0] = "label".into();
    final_header[1] = "t".into();
    let final_rows: Vec<Vec<String>> = rows
        .iter()
        .zip(&finals)
        .zip(&cfg.runs)
        .map(|((r, q), run)| {
            let steps = r.divergence.map_or(run.steps, |d| d - 1);
            let mut row = vec![r.label.clone(), num(steps as f64 * run.h)];
            row.extend(q.as_slice().iter().map(|x| num(*x)));
            row
        })
        .collect();
    write_table(&out.join("finals.csv"), &final_header, &final_rows)?;

    let mut matrix_header = vec!["label".to_string()];
    matrix_header.extend(labels.iter().cloned());
    let matrix = |f: &dyn Fn(usize, usize) -> String| -> Vec<Vec<String>> {
        (0..n)
            .map(|i| {
                let mut r = vec![labels[i].clone()];
                r.extend((0..n).map(|j| f(i, j)));
                r
            })
            .collect()
    };
    write_table(
        &out.join("discrepancy.csv"),
        &matrix_header,
        &matrix(&|i, j| num(discrepancy[i][j])),
    )?;
    write_table(
        &out.join("congruence.csv"),
        &matrix_header,
        &matrix(&|i, j| u8::from(congruent[i][j]).to_string()),
    )?;

    let report = CompareReport {
        rows,
        discrepancy,
        congruent,
        finals,
    };
    write_metadata(out, "compare", cfg, start, serde_json::to_value(&report)?)?;
    if let Some(step) = report.rows.iter().find_map(|r| r.divergence) {
        return Err(CliError::Diverged { step });
    }
    Ok(report)
}

fn row_for(run: &RunConfig, t: &Trajectory, wall: f64) -> CompareRow {
    CompareRow {
        label: run.label(),
        integrator: run.integrator,
        h: run.h,
        steps: run.steps,
        rhs_evals: t.rhs_evals,
        wall_seconds: wall,
        final_energy: t.energy.last().map_or(f64::NAN, |e| e.total),
        divergence: t.divergence,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaArgs {
    pub radius: f64,
    pub momentum_bound: f64,
    pub kappa: f64,
    pub num_agents: usize,
    pub num_edges: usize,
    pub max_distance: f64,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaOutcome {
    pub m: f64,
    pub alpha: f64,
    /// `alpha` rounded to two significant digits.
    pub alpha_rounded: f64,
    pub h: Option<f64>,
    /// Guaranteed step count for `h`, `None` when `h` is absent or too large.
    pub max_steps: Option<u64>,
    pub violation: bool,
}

/// Computes the step-size bound. A supplied `h` above `alpha` is flagged in
/// the outcome rather than returned as an error so the report can still be
/// printed.
pub fn cmd_alpha(args: &AlphaArgs) -> CliResult<AlphaOutcome> {
    for (name, x) in [
        ("radius", args.radius),
        ("momentum_bound", args.momentum_bound),
        ("kappa", args.kappa),
        ("max_distance", args.max_distance),
    ] {
        if !(x.is_finite() && x > 0.0) {
            return Err(CliError::config(format!("{name}: must be positive, got {x}")));
        }
    }
    if args.num_agents == 0 {
        return Err(CliError::config("agents: must be at least 1"));
    }
    let report = alpha_bound(&AlphaInputs {
        radius: args.radius,
        momentum_bound: args.momentum_bound,
        kappa: args.kappa,
        num_agents: args.num_agents,
        num_edges: args.num_edges,
        max_distance: args.max_distance,
    })?;
    let (max_steps, violation) = match args.h {
        None => (None, false),
        Some(h) => match max_guaranteed_steps(h, report.alpha) {
            Ok(k) => (Some(k), false),
            Err(formation_vi::Error::GuaranteeViolated { .. }) => (None, true),
            Err(e) => return Err(e.into()),
        },
    };
    let scale = 10f64.powi(1 - report.alpha.log10().floor() as i32);
    Ok(AlphaOutcome {
        m: report.m,
        alpha: report.alpha,
        alpha_rounded: (report.alpha * scale).round() / scale,
        h: args.h,
        max_steps,
        violation,
    })
}

/// Empirical order for each configured method; writes `order.csv`
/// (`method,h,error`), `order_slopes.csv` (`method,slope,reference_h,horizon`)
/// and `run.json`.
pub fn cmd_order(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<OrderEstimate>> {
    let start = Instant::now();
    let order = cfg
        .order
        .as_ref()
        .ok_or_else(|| CliError::config("order: section missing"))?;
    let exp = cfg.build()?;
    let mut estimates = Vec::new();
    for &method in &order.methods {
        let problem = OrderProblem {
            formation: &exp.formation,
            q0: &exp.q0,
            v0: &exp.v0,
            kappa: cfg.kappa,
            method,
        };
        estimates.push(estimate_order(&problem, &order.h_list, order.horizon)?);
    }
    fs::create_dir_all(out)?;
    let errors: Vec<Vec<String>> = estimates
        .iter()
        .flat_map(|e| {
            e.errors
                .iter()
                .map(|(h, err)| vec![e.method.name().to_string(), num(*h), num(*err)])
        })
        .collect();
    write_table(
        &out.join("order.csv"),
        &["method", "h", "error"].map(String::from),
        &errors,
    )?;
    let slopes: Vec<Vec<String>> = estimates
        .iter()
        .map(|e| {
            vec![
                e.method.name().to_string(),
                num(e.slope),
                num(e.reference_h),
                num(e.horizon),
            ]
        })
        .collect();
    write_table(
        &out.join("order_slopes.csv"),
        &["method", "slope", "reference_h", "horizon"].map(String::from),
        &slopes,
    )?;
    write_metadata(out, "order", cfg, start, serde_json::to_value(&estimates)?)?;
    Ok(estimates)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoaReport {
    pub samples: usize,
    pub workers: usize,
    /// Counts indexed by class code.
    pub counts: [usize; 4],
}

impl RoaReport {
    pub fn count(&self, c: Classification) -> usize {
        self.counts[c.code() as usize]
    }
}

/// Builds the sweep configuration from the experiment file.
pub fn roa_config(cfg: &ExperimentConfig) -> CliResult<RoaConfig> {
    let roa = cfg
        .roa
        .as_ref()
        .ok_or_else(|| CliError::config("roa: section missing"))?;
    let desired = cfg
        .potential
        .desired
        .clone()
        .ok_or_else(|| CliError::config("roa: requires `potential.desired`"))?;
    Ok(RoaConfig {
        desired,
        displaced_agent: roa.displaced_agent,
        sampling: roa.sampling.clone(),
        h: cfg.h,
        kappa: cfg.kappa,
        max_steps: cfg.steps,
        rel_tol: roa.rel_tol,
        vel_threshold: roa.vel_threshold,
        seed: cfg.seed,
    })
}

/// Runs the sweep and writes `roa.csv`, `roa.meta.json` and `run.json`.
pub fn cmd_roa(cfg: &ExperimentConfig, out: &Path, workers: Option<usize>) -> CliResult<RoaReport> {
    let start = Instant::now();
    let exp = cfg.build()?;
    let rc = roa_config(cfg)?;
    rc.validate(&exp.formation)
        .map_err(|e| CliError::config(format!("roa: {e}")))?;
    let workers = match workers {
        Some(0) => return Err(CliError::config("workers: must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let (outcomes, _) = run_sweep_to_dir(&rc, &exp.formation, out, Some(workers))?;
    let report = RoaReport {
        samples: outcomes.len(),
        workers,
        counts: summarize(&outcomes),
    };
    write_metadata(out, "roa", cfg, start, serde_json::to_value(&report)?)?;
    Ok(report)
}
