//! Input pulse files: CSV with header `t,re,im` on a uniform grid.

use std::path::Path;

use num_complex::Complex64;

use absorber_core::{Error, Signal, TimeGrid};

use crate::error::{CliError, CliResult};

/// Relative spacing tolerance for the time column.
const GRID_TOLERANCE: f64 = 1e-6;
/// Relative rounding of a time value written with twelve significant digits.
const PRINT_ROUNDING: f64 = 1e-11;
/// Probability deviation from one that triggers renormalisation.
const NORM_TOLERANCE: f64 = 1e-4;

pub fn read_pulse(path: &Path) -> CliResult<Signal> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::io(format!("cannot open input {}", path.display()), e))?;
    let name = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| CliError::Config(format!("input {name}: {e}")))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["t", "re", "im"] {
        return Err(CliError::Config(format!(
            "input {name}: expected header `t,re,im`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record =
            record.map_err(|e| CliError::Config(format!("input {name}, row {row}: {e}")))?;
        if record.len() != 3 {
            return Err(CliError::Config(format!(
                "input {name}, row {row}: expected 3 columns, found {}",
                record.len()
            )));
        }
        let mut parsed = [0.0; 3];
        for (col, (field, label)) in record.iter().zip(["t", "re", "im"]).enumerate() {
            parsed[col] = field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                CliError::Config(format!(
                    "input {name}, row {row}, column {} ({label}): `{field}` is not a finite number",
                    col + 1
                ))
            })?;
        }
        times.push(parsed[0]);
        values.push(Complex64::new(parsed[1], parsed[2]));
    }
    // Point at the first irregular step; the lattice fit below can only name
    // the first sample it rejects, which is often earlier.
    if times.len() >= 2 {
        let h = times[1] - times[0];
        let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let slack = GRID_TOLERANCE * h.abs() + 2.0 * PRINT_ROUNDING * t_max;
        if let Some(k) = (2..times.len()).find(|&k| !((times[k] - times[k - 1] - h).abs() <= slack))
        {
            return Err(CliError::Config(format!(
                "input {name}, row {}: time step {} differs from the first step {h}",
                k + 1,
                times[k] - times[k - 1]
            )));
        }
    }
    let rel_tol = slack_over_step(&times);
    let grid = TimeGrid::from_times(&times, rel_tol).map_err(|e| match e {
        Error::NonUniformGrid { index, deviation } => CliError::Config(format!(
            "input {name}, row {}: time column is not uniform (deviation {deviation:e})",
            index + 1
        )),
        other => CliError::Config(format!("input {name}: {other}")),
    })?;
    let signal = Signal::new(grid, values)?;
    let prob = signal.total_probability();
    if !(prob > 0.0) {
        return Err(CliError::Config(format!(
            "input {name}: pulse carries no probability"
        )));
    }
    if (prob - 1.0).abs() > NORM_TOLERANCE {
        log::warn!("input {name}: probability {prob:.6} renormalised to 1");
        return Ok(signal.scaled(1.0 / prob.sqrt()));
    }
    Ok(signal)
}

/// Lattice tolerance in units of the mean step, allowing for printed rounding.
fn slack_over_step(times: &[f64]) -> f64 {
    let n = times.len();
    if n < 2 {
        return GRID_TOLERANCE;
    }
    let dt = ((times[n - 1] - times[0]) / (n - 1) as f64).abs();
    let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    GRID_TOLERANCE + PRINT_ROUNDING * t_max / dt
}
