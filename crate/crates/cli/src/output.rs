//! Deterministic CSV/JSON emission and the provenance sidecar.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use absorber_core::TimeGrid;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Twelve significant digits, the only float format used in CSV files.
pub fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

/// `x` rounded to twelve significant digits.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        fmt(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n
                    .as_f64()
                    .map(round12)
                    .and_then(serde_json::Number::from_f64)
                {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serialises `value` with every float rounded to twelve significant digits.
pub fn rounded_json(value: &impl Serialize) -> Value {
    let mut v = serde_json::to_value(value).expect("serialisable report");
    round_value(&mut v);
    v
}

/// Column-oriented numeric table.
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            columns: vec![Vec::new(); header.len()],
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    pub fn to_csv(&self) -> String {
        let rows = self.columns.first().map_or(0, Vec::len);
        let mut out = self.header.join(",");
        out.push('\n');
        for r in 0..rows {
            let line: Vec<String> = self.columns.iter().map(|c| fmt(c[r])).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (h, c) in self.header.iter().zip(&self.columns) {
            map.insert(h.clone(), rounded_json(c));
        }
        Value::Object(map)
    }
}

/// Provenance that is identical for identical configurations.
pub fn provenance(cfg: &RunConfig, command: &str, grids: &[(f64, TimeGrid, usize)]) -> Value {
    let grids: Vec<Value> = grids
        .iter()
        .map(|(d, g, nz)| {
            json!({
                "alpha_L": d,
                "t_start": g.t_start(),
                "dt": g.dt(),
                "samples": g.len(),
                "z_points": nz,
            })
        })
        .collect();
    let mut v = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "grids": grids,
    });
    round_value(&mut v);
    v
}

/// Writes files under the output directory and remembers them for the sidecar.
pub struct Emitter {
    dir: PathBuf,
    written: Vec<String>,
    started: Instant,
}

impl Emitter {
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("cannot create {}", parent.display()), e))?;
        }
        fs::write(&path, contents)
            .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        log::info!("wrote {}", path.display());
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("json value");
        text.push('\n');
        self.write(name, &text)
    }

    /// `provenance.json`: the deterministic block plus wall time and file list.
    pub fn finish(mut self, provenance: Value) -> CliResult<()> {
        let side = json!({
            "provenance": provenance,
            "files": self.written,
            "wall_time_seconds": self.started.elapsed().as_secs_f64(),
        });
        let mut text = serde_json::to_string_pretty(&side).expect("json value");
        text.push('\n');
        let path = self.dir.join("provenance.json");
        fs::write(&path, text)
            .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        self.written.push("provenance.json".into());
        Ok(())
    }
}

/// File-name tag for an optical depth, e.g. `aL100` or `aL0.5`.
pub fn tag(alpha_l: f64) -> String {
    format!("aL{alpha_l}")
}
