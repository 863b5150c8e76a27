use rayon::prelude::*;
use serde_json::{json, Value};

use absorber_core::metrics::simulate;
use absorber_core::optimal::build_optimal;
use absorber_core::propagation::{atomic_amplitude, propagate};
use absorber_core::{DepthGrid, MediumParams, MetricsReport, OptimalPulseSpec, Signal, TimeGrid};

use crate::config::{InputSource, RunConfig};
use crate::error::{CliError, CliResult};
use crate::input::read_pulse;
use crate::output::{provenance, rounded_json, tag, Emitter, Table};

/// The input pulse for medium `p`: the optimal pulse on the configured grid,
/// or the file pulse as given.
fn input_for(cfg: &RunConfig, p: &MediumParams, file: Option<&Signal>) -> CliResult<Signal> {
    match file {
        Some(s) => Ok(s.clone()),
        None => {
            let spec = OptimalPulseSpec::with_grid(*p, cfg.time_grid(p)?);
            Ok(build_optimal(&spec)?)
        }
    }
}

fn load_file_input(cfg: &RunConfig) -> CliResult<Option<Signal>> {
    match &cfg.input {
        InputSource::Optimal => Ok(None),
        InputSource::File(path) => read_pulse(path).map(Some),
    }
}

pub fn optimal_pulse(cfg: &RunConfig) -> CliResult<()> {
    let depths = cfg.depths()?.to_vec();
    let mut out = Emitter::new(&cfg.output_dir)?;
    let mut grids = Vec::new();
    let sqrt_t2 = cfg.t2.sqrt();
    for d in depths {
        let p = cfg.medium(d)?;
        let grid = cfg.time_grid(&p)?;
        let pulse = build_optimal(&OptimalPulseSpec::with_grid(p, grid))?;
        grids.push((d, grid, 0));
        if cfg.format.csv() {
            let mut t = Table::new(&["t_over_T2", "F_in"]);
            for (time, v) in pulse.iter() {
                t.push(&[time / cfg.t2, v.re * sqrt_t2]);
            }
            out.write(&format!("optimal_pulse_{}.csv", tag(d)), &t.to_csv())?;
        }
        if cfg.format.json() {
            let doc = json!({
                "alpha_L": d,
                "norm_const": p.norm_const()?,
                "normalization_residual": pulse.total_probability() - 1.0,
                "provenance": provenance(cfg, "optimal-pulse", &[(d, grid, 0)]),
            });
            out.write_json(
                &format!("optimal_pulse_{}.json", tag(d)),
                &rounded_json(&doc),
            )?;
        }
    }
    out.finish(provenance(cfg, "optimal-pulse", &grids))
}

fn signal_table(t: &mut Table, columns: &[&Signal]) {
    let grid = columns[0].grid();
    for k in 0..grid.len() {
        let mut row = vec![grid.time(k)];
        for s in columns {
            row.push(s.samples()[k].re);
            row.push(s.samples()[k].im);
        }
        t.push(&row);
    }
}

pub fn simulate_cmd(cfg: &RunConfig) -> CliResult<()> {
    let depths = cfg.depths()?.to_vec();
    let file = load_file_input(cfg)?;
    let mut out = Emitter::new(&cfg.output_dir)?;
    let mut grids = Vec::new();
    for d in depths {
        let p = cfg.medium(d)?;
        let input = input_for(cfg, &p, file.as_ref())?;
        let z = cfg.depth_grid(&p)?;
        let sim = simulate(&input, &p, &z)?;
        let mid = propagate(&input, &p, 0.5 * p.length)?;
        let dir = format!("simulate_{}", tag(d));
        let grid = *input.grid();
        grids.push((d, grid, z.len()));

        let mut pulse = Table::new(&["t", "re", "im"]);
        signal_table(&mut pulse, &[&input]);
        let mut signals = Table::new(&[
            "t", "in_re", "in_im", "out_re", "out_im", "mid_re", "mid_im",
        ]);
        signal_table(&mut signals, &[&input, &sim.output, &mid]);
        let mut profile = Table::new(&["z", "re", "im", "abs"]);
        for (zi, c) in sim.profile.z.iter().zip(&sim.profile.c) {
            profile.push(&[*zi, c.re, c.im, c.norm()]);
        }
        if cfg.format.csv() {
            out.write(&format!("{dir}/input_pulse.csv"), &pulse.to_csv())?;
            out.write(&format!("{dir}/signals.csv"), &signals.to_csv())?;
            out.write(&format!("{dir}/profile.csv"), &profile.to_csv())?;
        }
        if cfg.format.json() {
            out.write_json(&format!("{dir}/signals.json"), &signals.to_json())?;
            out.write_json(&format!("{dir}/profile.json"), &profile.to_json())?;
        }
        let mut doc = rounded_json(&sim.report);
        doc["provenance"] = provenance(cfg, "simulate", &[(d, grid, z.len())]);
        out.write_json(&format!("{dir}/metrics.json"), &doc)?;
    }
    out.finish(provenance(cfg, "simulate", &grids))
}

struct SweepPoint {
    alpha_l: f64,
    result: Result<(MetricsReport, TimeGrid, usize), String>,
}

fn sweep_point(cfg: &RunConfig, file: Option<&Signal>, d: f64) -> SweepPoint {
    let run = || -> CliResult<(MetricsReport, TimeGrid, usize)> {
        let p = cfg.medium(d)?;
        let input = input_for(cfg, &p, file)?;
        let z: DepthGrid = cfg.depth_grid(&p)?;
        let sim = simulate(&input, &p, &z)?;
        Ok((sim.report, *input.grid(), z.len()))
    };
    SweepPoint {
        alpha_l: d,
        result: run().map_err(|e| e.to_string()),
    }
}

pub fn sweep(cfg: &RunConfig) -> CliResult<()> {
    let depths = cfg.depths()?.to_vec();
    if depths.len() < 2 {
        return Err(CliError::Config(
            "sweep needs at least two alphaL values".into(),
        ));
    }
    let file = load_file_input(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        depths
            .par_iter()
            .map(|&d| sweep_point(cfg, file.as_ref(), d))
            .collect()
    });

    let mut table = Table::new(&[
        "alphaL",
        "failed",
        "E_numerical",
        "E_asymptotic",
        "abs_delta",
        "p_abs",
        "p_abs_closed",
        "first_burst_fraction",
        "flatness_cv",
        "boundary_layer_width",
    ]);
    let mut rows: Vec<Value> = Vec::new();
    let mut grids = Vec::new();
    let mut failed = 0;
    for pt in &points {
        match &pt.result {
            Ok((r, grid, nz)) => {
                grids.push((pt.alpha_l, *grid, *nz));
                table.push(&[
                    pt.alpha_l,
                    0.0,
                    r.efficiency,
                    r.efficiency_asymptotic,
                    (r.efficiency - r.efficiency_asymptotic).abs(),
                    r.p_abs,
                    r.p_abs_closed,
                    r.first_burst_fraction,
                    r.flatness_cv,
                    r.boundary_layer_width,
                ]);
                rows.push(
                    json!({"alpha_L": pt.alpha_l, "status": "ok", "report": rounded_json(r)}),
                );
            }
            Err(msg) => {
                failed += 1;
                log::error!("sweep point alphaL = {} failed: {msg}", pt.alpha_l);
                let mut row = vec![f64::NAN; 10];
                row[0] = pt.alpha_l;
                row[1] = 1.0;
                table.push(&row);
                rows.push(json!({"alpha_L": pt.alpha_l, "status": "failed", "error": msg}));
            }
        }
    }
    let prov = provenance(cfg, "sweep", &grids);
    let mut out = Emitter::new(&cfg.output_dir)?;
    if cfg.format.csv() {
        out.write("sweep.csv", &table.to_csv())?;
    }
    if cfg.format.json() {
        out.write_json(
            "sweep.json",
            &json!({"rows": rows, "provenance": prov.clone()}),
        )?;
    }
    out.finish(prov)?;
    if failed > 0 {
        return Err(CliError::PartialSweep {
            failed,
            total: points.len(),
        });
    }
    Ok(())
}

pub fn figure(name: &str, cfg: &RunConfig) -> CliResult<()> {
    match name {
        "fig2" => fig2(cfg),
        "fig3" => fig3(cfg),
        other => Err(CliError::Config(format!(
            "unknown figure `{other}` (expected fig2 or fig3)"
        ))),
    }
}

fn depths_or(cfg: &RunConfig, default: &[f64]) -> Vec<f64> {
    if cfg.alpha_l.is_empty() {
        default.to_vec()
    } else {
        cfg.alpha_l.clone()
    }
}

fn fig2(cfg: &RunConfig) -> CliResult<()> {
    let mut out = Emitter::new(&cfg.output_dir)?;
    let mut grids = Vec::new();
    let sqrt_t2 = cfg.t2.sqrt();
    for d in depths_or(cfg, &[10.0, 100.0]) {
        let p = cfg.medium(d)?;
        let input = input_for(cfg, &p, None)?;
        let output = propagate(&input, &p, p.length)?;
        grids.push((d, *input.grid(), 0));
        let mut t = Table::new(&["t_over_T2", "F_in", "F_out"]);
        for k in 0..input.len() {
            t.push(&[
                input.grid().time(k) / cfg.t2,
                input.samples()[k].re * sqrt_t2,
                output.samples()[k].re * sqrt_t2,
            ]);
        }
        if cfg.format.csv() {
            out.write(&format!("fig2_{}.csv", tag(d)), &t.to_csv())?;
        }
        if cfg.format.json() {
            out.write_json(&format!("fig2_{}.json", tag(d)), &t.to_json())?;
        }
    }
    out.finish(provenance(cfg, "figure fig2", &grids))
}

fn fig3(cfg: &RunConfig) -> CliResult<()> {
    let depths = depths_or(cfg, &[10.0, 100.0, 1000.0]);
    let n = cfg.z_points.unwrap_or(1001);
    let z = DepthGrid::uniform(cfg.length, n)?;
    let mut header = vec!["z_over_L".to_string()];
    header.extend(depths.iter().map(|d| format!("abs_c_sqrtL_{}", tag(*d))));
    let mut columns = vec![z
        .points()
        .iter()
        .map(|zi| zi / cfg.length)
        .collect::<Vec<_>>()];
    let mut grids = Vec::new();
    for &d in &depths {
        let p = cfg.medium(d)?;
        let input = input_for(cfg, &p, None)?;
        grids.push((d, *input.grid(), n));
        let profile = atomic_amplitude(&input, &p, &z, 0.0)?;
        columns.push(
            profile
                .c
                .iter()
                .map(|c| c.norm() * cfg.length.sqrt())
                .collect(),
        );
    }
    let table = Table { header, columns };
    let mut out = Emitter::new(&cfg.output_dir)?;
    if cfg.format.csv() {
        out.write("fig3.csv", &table.to_csv())?;
    }
    if cfg.format.json() {
        out.write_json("fig3.json", &table.to_json())?;
    }
    out.finish(provenance(cfg, "figure fig3", &grids))
}
