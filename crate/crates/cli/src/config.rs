//! Run configuration: command-line flags over a JSON config file over defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use absorber_core::{DepthGrid, MediumParams, TimeGrid};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// Optical depth αL; repeat for several values.
    #[arg(long = "alphaL", global = true, value_name = "D")]
    pub alpha_l: Vec<f64>,
    /// Coherence time T2 (default 1).
    #[arg(long = "T2", global = true)]
    pub t2: Option<f64>,
    /// Absorption coefficient α (physical-units mode).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Medium length L (default 1).
    #[arg(long, global = true)]
    pub length: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long = "t-min", global = true, allow_hyphen_values = true)]
    pub t_min: Option<f64>,
    #[arg(long = "t-max", global = true, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    /// Depth points of the excitation profile.
    #[arg(long = "z-points", global = true)]
    pub z_points: Option<usize>,
    /// Input pulse: `optimal` or a CSV file with header `t,re,im`.
    #[arg(long, global = true, value_name = "FILE")]
    pub input: Option<String>,
    /// Output directory.
    #[arg(long = "out", global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

/// A single value or a list, as accepted for `alpha_L` in config files.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "alpha_L")]
    alpha_l: Option<OneOrMany>,
    #[serde(rename = "T2")]
    t2: Option<f64>,
    alpha: Option<f64>,
    length: Option<f64>,
    dt: Option<f64>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    z_points: Option<usize>,
    input: Option<String>,
    output_dir: Option<PathBuf>,
    format: Option<Format>,
    jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    Optimal,
    File(PathBuf),
}

/// Effective configuration of a run; echoed into provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(rename = "alpha_L")]
    pub alpha_l: Vec<f64>,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub length: f64,
    pub physical_units: bool,
    pub dt: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub z_points: Option<usize>,
    pub input: InputSource,
    pub output_dir: PathBuf,
    pub format: Format,
    pub jobs: Option<usize>,
}

fn read_file_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config {}", path.display()), e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

fn positive(name: &str, v: Option<f64>) -> CliResult<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Config(format!(
            "{name} must be positive and finite (got {x})"
        ))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn resolve(opts: &Opts) -> CliResult<Self> {
        let file = match &opts.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };
        let t2 = opts.t2.or(file.t2);
        let length = opts.length.or(file.length);
        let alpha = opts.alpha.or(file.alpha);
        positive("T2", t2)?;
        positive("length", length)?;
        if let Some(a) = alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(CliError::Config(format!(
                    "alpha must be non-negative (got {a})"
                )));
            }
        }
        let physical_units = t2.is_some() && length.is_some() && alpha.is_some();
        let length_v = length.unwrap_or(1.0);
        let mut alpha_l = if !opts.alpha_l.is_empty() {
            opts.alpha_l.clone()
        } else {
            match file.alpha_l {
                Some(OneOrMany::One(x)) => vec![x],
                Some(OneOrMany::Many(v)) => v,
                None => Vec::new(),
            }
        };
        if let Some(a) = alpha {
            let implied = a * length_v;
            if alpha_l.is_empty() {
                alpha_l.push(implied);
            } else if alpha_l
                .iter()
                .any(|d| (d - implied).abs() > 1e-12 * implied.max(1.0))
            {
                return Err(CliError::Config(format!(
                    "alpha·length = {implied} contradicts --alphaL {alpha_l:?}"
                )));
            }
        }
        for &d in &alpha_l {
            if !(d > 0.0 && d.is_finite()) {
                return Err(CliError::Config(format!(
                    "optical depth must be positive (got alphaL = {d})"
                )));
            }
        }
        let dt = opts.dt.or(file.dt);
        positive("dt", dt)?;
        let t_min = opts.t_min.or(file.t_min);
        let t_max = opts.t_max.or(file.t_max);
        if let (Some(a), Some(b)) = (t_min, t_max) {
            if !(a < b) {
                return Err(CliError::Config(format!(
                    "t-min {a} must be below t-max {b}"
                )));
            }
        }
        let z_points = opts.z_points.or(file.z_points);
        if let Some(n) = z_points {
            if n < 3 {
                return Err(CliError::Config(format!(
                    "z-points must be at least 3 (got {n})"
                )));
            }
        }
        let input = match opts.input.clone().or(file.input) {
            None => InputSource::Optimal,
            Some(s) if s == "optimal" => InputSource::Optimal,
            Some(s) => InputSource::File(PathBuf::from(s)),
        };
        let jobs = opts.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        Ok(RunConfig {
            alpha_l,
            t2: t2.unwrap_or(1.0),
            length: length_v,
            physical_units,
            dt,
            t_min,
            t_max,
            z_points,
            input,
            output_dir: opts
                .output_dir
                .clone()
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from("results")),
            format: opts.format.or(file.format).unwrap_or(Format::Both),
            jobs,
        })
    }

    /// The optical depths to run; an error when none were given.
    pub fn depths(&self) -> CliResult<&[f64]> {
        if self.alpha_l.is_empty() {
            return Err(CliError::Config(
                "no optical depth given (use --alphaL or alpha_L in the config file)".into(),
            ));
        }
        Ok(&self.alpha_l)
    }

    pub fn medium(&self, alpha_l: f64) -> CliResult<MediumParams> {
        Ok(MediumParams::new(
            alpha_l / self.length,
            self.length,
            self.t2,
        )?)
    }

    /// Default grid for `p`, with any explicit overrides applied (and logged).
    pub fn time_grid(&self, p: &MediumParams) -> CliResult<TimeGrid> {
        let default = TimeGrid::default_for(p.optical_depth(), p.t2)?;
        if self.dt.is_none() && self.t_min.is_none() && self.t_max.is_none() {
            return Ok(default);
        }
        let dt = self.dt.unwrap_or(default.dt());
        let t_min = self.t_min.unwrap_or(default.t_start() - 0.5 * default.dt());
        let t_max = self.t_max.unwrap_or(default.t_end() + 0.5 * default.dt());
        let grid = TimeGrid::cell_centered(t_min, t_max, dt)?;
        log::info!(
            "grid override for alphaL = {}: [{t_min}, {t_max}] with dt = {dt} ({} samples)",
            p.optical_depth(),
            grid.len()
        );
        Ok(grid)
    }

    pub fn depth_grid(&self, p: &MediumParams) -> CliResult<DepthGrid> {
        Ok(match self.z_points {
            Some(n) => DepthGrid::refined_for(p, n)?,
            None => DepthGrid::default_for(p)?,
        })
    }
}
