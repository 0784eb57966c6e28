//! Region-of-attraction sweeps.
//!
//! One agent is displaced from the desired shape while the others stay put,
//! everything starts at rest, and the variational integrator is run for a
//! fixed budget. Each sample is classified from the last two positions.
//!
//! The outcome table is comma separated with the header
//! `x,y,class,steps,final_energy` (coordinates are named `x,y,z` and then
//! `x3, x4, ...` in higher dimension). Floats are written with 17 significant
//! digits. Class codes are listed on [`Classification`].

use std::fs::{self, File};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_congruent, Configuration};
use crate::system::Formation;
use crate::vi::{advance, discrete_energy, ViParams};

/// Samples written between flushes of the outcome table.
pub const CHUNK_SIZE: usize = 1024;

/// File names used by [`run_sweep_to_dir`].
pub const TABLE_FILE: &str = "roa.csv";
pub const META_FILE: &str = "roa.meta.json";
pub const PARTIAL_MARKER: &str = "roa.csv.partial";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampling {
    /// `resolution` points per axis over the closed box, endpoints included.
    /// The last coordinate varies fastest.
    Grid {
        lower: Vec<f64>,
        upper: Vec<f64>,
        resolution: usize,
    },
    /// `count` uniform points in the box drawn from the config seed.
    Random {
        lower: Vec<f64>,
        upper: Vec<f64>,
        count: usize,
    },
    Explicit { points: Vec<Vec<f64>> },
}

fn default_rel_tol() -> f64 {
    0.01
}

fn default_vel_threshold() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoaConfig {
    pub desired: Configuration,
    pub displaced_agent: usize,
    pub sampling: Sampling,
    pub h: f64,
    pub kappa: f64,
    pub max_steps: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_vel_threshold")]
    pub vel_threshold: f64,
    /// Used by random sampling only; always recorded.
    #[serde(default)]
    pub seed: u64,
}

impl RoaConfig {
    pub fn validate(&self, formation: &Formation) -> Result<()> {
        formation.check(&self.desired)?;
        let s = formation.num_agents();
        let n = formation.dim();
        if self.displaced_agent >= s {
            return Err(Error::AgentOutOfRange {
                index: self.displaced_agent,
                num_agents: s,
            });
        }
        ViParams::new(self.h, self.kappa)?;
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be positive"));
        }
        if !(self.vel_threshold.is_finite() && self.vel_threshold > 0.0) {
            return Err(Error::invalid("vel_threshold", "must be positive"));
        }
        let check_box = |lower: &[f64], upper: &[f64]| -> Result<()> {
            for b in [lower, upper] {
                if b.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: b.len(),
                    });
                }
            }
            if lower.iter().zip(upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
                return Err(Error::invalid("sampling", "box bounds must be finite with lower <= upper"));
            }
            Ok(())
        };
        match &self.sampling {
            Sampling::Grid {
                lower,
                upper,
                resolution,
            } => {
                check_box(lower, upper)?;
                if *resolution == 0 {
                    return Err(Error::invalid("resolution", "must be at least 1"));
                }
            }
            Sampling::Random { lower, upper, count } => {
                check_box(lower, upper)?;
                if *count == 0 {
                    return Err(Error::invalid("count", "must be at least 1"));
                }
            }
            Sampling::Explicit { points } => {
                if points.is_empty() {
                    return Err(Error::invalid("points", "must not be empty"));
                }
                for p in points {
                    if p.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: p.len(),
                        });
                    }
                    if p.iter().any(|x| !x.is_finite()) {
                        return Err(Error::invalid("points", "must be finite"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Sample points in table order.
    pub fn samples(&self) -> Vec<Vec<f64>> {
        match &self.sampling {
            Sampling::Grid {
                lower,
                upper,
                resolution,
            } => {
                let n = lower.len();
                let r = *resolution;
                let axis = |d: usize, i: usize| {
                    if r == 1 {
                        0.5 * (lower[d] + upper[d])
                    } else {
                        lower[d] + (upper[d] - lower[d]) * i as f64 / (r - 1) as f64
                    }
                };
                let total = r.pow(n as u32);
                (0..total)
                    .map(|mut idx| {
                        let mut p = vec![0.0; n];
                        for d in (0..n).rev() {
                            p[d] = axis(d, idx % r);
                            idx /= r;
                        }
                        p
                    })
                    .collect()
            }
            Sampling::Random { lower, upper, count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..*count)
                    .map(|_| {
                        lower
                            .iter()
                            .zip(upper)
                            .map(|(l, u)| if l < u { rng.gen_range(*l..*u) } else { *l })
                            .collect()
                    })
                    .collect()
            }
            Sampling::Explicit { points } => points.clone(),
        }
    }
}

/// Outcome class. The integer code is the value written to the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Code 0: at rest and congruent to the desired shape.
    ConvergedCongruent,
    /// Code 1: at rest in some other shape.
    ConvergedOther,
    /// Code 2: still moving at the end of the budget.
    NotConverged,
    /// Code 3: the state became non-finite.
    Diverged,
}

impl Classification {
    pub const ALL: [Classification; 4] = [
        Classification::ConvergedCongruent,
        Classification::ConvergedOther,
        Classification::NotConverged,
        Classification::Diverged,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoaOutcome {
    pub point: Vec<f64>,
    pub classification: Classification,
    pub steps_used: usize,
    /// Energy of the last interval; NaN when the run diverged.
    pub final_energy: f64,
}

/// Classifies a run from its last two positions, with velocities taken as
/// the backward difference `(last - prev) / h`.
pub fn classify_final(
    prev: &Configuration,
    last: &Configuration,
    q_star: &Configuration,
    rel_tol: f64,
    vel_threshold: f64,
    h: f64,
) -> Classification {
    if !prev.is_finite() || !last.is_finite() {
        return Classification::Diverged;
    }
    let resting = (0..last.num_agents()).all(|i| {
        let v2: f64 = last
            .agent(i)
            .iter()
            .zip(prev.agent(i))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        v2.sqrt() / h < vel_threshold
    });
    if !resting {
        return Classification::NotConverged;
    }
    match is_congruent(last, q_star, rel_tol) {
        Ok(true) => Classification::ConvergedCongruent,
        Ok(false) => Classification::ConvergedOther,
        Err(_) => Classification::ConvergedOther,
    }
}

/// Simulates one sample: `displaced_agent` moved to `point`, all at rest.
pub fn run_sample(cfg: &RoaConfig, formation: &Formation, point: &[f64]) -> Result<RoaOutcome> {
    let params = ViParams::new(cfg.h, cfg.kappa)?;
    let n = formation.dim();
    if point.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: point.len(),
        });
    }
    let mut q0 = cfg.desired.clone();
    q0.agent_mut(cfg.displaced_agent).copy_from_slice(point);

    // Rest start: q_1 = q_0.
    let mut prev = q0.as_slice().to_vec();
    let mut curr = prev.clone();
    let mut grad = vec![0.0; prev.len()];
    let mut steps_used = 1;
    let mut diverged = false;
    while steps_used < cfg.max_steps {
        let next = advance(&prev, &curr, &params, formation, &mut grad);
        steps_used += 1;
        prev = curr;
        curr = next;
        if curr.iter().any(|x| !x.is_finite()) {
            diverged = true;
            break;
        }
    }
    let s = formation.num_agents();
    if diverged {
        return Ok(RoaOutcome {
            point: point.to_vec(),
            classification: Classification::Diverged,
            steps_used,
            final_energy: f64::NAN,
        });
    }
    let prev = Configuration::from_raw(s, n, prev);
    let last = Configuration::from_raw(s, n, curr);
    let classification = classify_final(&prev, &last, &cfg.desired, cfg.rel_tol, cfg.vel_threshold, cfg.h);
    let final_energy = discrete_energy(&prev, &last, &params, formation)?.total / cfg.h;
    Ok(RoaOutcome {
        point: point.to_vec(),
        classification,
        steps_used,
        final_energy,
    })
}

fn run_points(cfg: &RoaConfig, formation: &Formation, points: &[Vec<f64>]) -> Result<Vec<RoaOutcome>> {
    points.par_iter().map(|p| run_sample(cfg, formation, p)).collect()
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::invalid("workers", "must be at least 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every sample in parallel and returns the outcomes in sample order.
/// `workers = None` uses the global rayon pool.
pub fn run_sweep(cfg: &RoaConfig, formation: &Formation, workers: Option<usize>) -> Result<Vec<RoaOutcome>> {
    cfg.validate(formation)?;
    let points = cfg.samples();
    with_workers(workers, || run_points(cfg, formation, &points))?
}

/// Counts per classification, indexed by code.
pub fn summarize(outcomes: &[RoaOutcome]) -> [usize; 4] {
    let mut counts = [0; 4];
    for o in outcomes {
        counts[o.classification.code() as usize] += 1;
    }
    counts
}

/// Sidecar written next to the outcome table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub config: RoaConfig,
    pub version: String,
    pub workers: usize,
    pub samples: usize,
    pub counts: [usize; 4],
    pub elapsed_seconds: f64,
    pub columns: Vec<String>,
}

pub fn table_header(dim: usize) -> Vec<String> {
    let mut cols: Vec<String> = (0..dim)
        .map(|d| match d {
            0 => "x".to_string(),
            1 => "y".to_string(),
            2 => "z".to_string(),
            _ => format!("x{d}"),
        })
        .collect();
    cols.extend(["class", "steps", "final_energy"].map(String::from));
    cols
}

fn row(o: &RoaOutcome) -> Vec<String> {
    let mut r: Vec<String> = o.point.iter().map(|x| format!("{x:.16e}")).collect();
    r.push(o.classification.code().to_string());
    r.push(o.steps_used.to_string());
    r.push(format!("{:.16e}", o.final_energy));
    r
}

/// Paths produced by [`run_sweep_to_dir`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFiles {
    pub table: PathBuf,
    pub metadata: PathBuf,
}

/// Runs the sweep in chunks of [`CHUNK_SIZE`] samples, appending and flushing
/// each chunk to the outcome table. A marker file sits next to the table
/// until the sweep completes, so an interrupted run is recognisable.
pub fn run_sweep_to_dir(
    cfg: &RoaConfig,
    formation: &Formation,
    dir: &Path,
    workers: Option<usize>,
) -> Result<(Vec<RoaOutcome>, SweepFiles)> {
    cfg.validate(formation)?;
    let start = Instant::now();
    fs::create_dir_all(dir)?;
    let table = dir.join(TABLE_FILE);
    let marker = dir.join(PARTIAL_MARKER);
    let metadata = dir.join(META_FILE);
    File::create(&marker)?;

    let points = cfg.samples();
    let mut writer = csv::Writer::from_path(&table)?;
    writer.write_record(table_header(formation.dim()))?;
    let mut outcomes = Vec::with_capacity(points.len());
    for chunk in points.chunks(CHUNK_SIZE) {
        let done = with_workers(workers, || run_points(cfg, formation, chunk))??;
        for o in &done {
            writer.write_record(row(o))?;
        }
        writer.flush()?;
        outcomes.extend(done);
    }
    drop(writer);

    let meta = SweepMetadata {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        workers: workers.unwrap_or_else(rayon::current_num_threads),
        samples: outcomes.len(),
        counts: summarize(&outcomes),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        columns: table_header(formation.dim()),
    };
    let mut f = File::create(&metadata)?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    fs::remove_file(&marker)?;
    Ok((outcomes, SweepFiles { table, metadata }))
}
