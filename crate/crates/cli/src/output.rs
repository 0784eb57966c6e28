//! Delimited-text writers. Floats are written with 17 significant digits.

use std::fs;
use std::path::Path;

use formation_vi::{Configuration, EnergyRecord};
use serde::Serialize;

use crate::error::CliResult;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header `step,t,q{i}_{d}...` (agent `i`, coordinate `d`).
pub fn position_header(num_agents: usize, dim: usize) -> Vec<String> {
    let mut h = vec!["step".to_string(), "t".to_string()];
    for i in 0..num_agents {
        for d in 0..dim {
            h.push(format!("q{i}_{d}"));
        }
    }
    h
}

pub fn write_positions(path: &Path, h: f64, positions: &[Configuration]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let first = &positions[0];
    w.write_record(position_header(first.num_agents(), first.dim()))?;
    for (k, q) in positions.iter().enumerate() {
        let mut row = vec![k.to_string(), num(k as f64 * h)];
        row.extend(q.as_slice().iter().map(|x| num(*x)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `step,kinetic,potential,total`.
pub fn write_energy(path: &Path, energy: &[EnergyRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "kinetic", "potential", "total"])?;
    for e in energy {
        w.write_record([e.step.to_string(), num(e.kinetic), num(e.potential), num(e.total)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
