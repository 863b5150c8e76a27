//! The matched-filter input pulse and its closed-form output.
//!
//! The optimal single-photon input for a medium of length `L` is the
//! time-reversed regular impulse response, `F_in(t) = -A(L)·Φ(-t, L)`. It ends
//! at `t = 0`, where the output `F(t, L) = γ(t, L) - F_in(-t)` takes over.

mod gamma;

pub use gamma::{
    gamma_asymptotic, gamma_on_grid, gamma_series, gamma_spectral, gamma_with, GammaMethod,
    GammaSeries, DEFAULT_M_MAX,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{phi, MediumParams};
use crate::signal::{Signal, TimeGrid, WindowWeights};

/// Probability allowed to fall before the grid start without comment.
const TRUNCATION_SILENT: f64 = 1e-6;
/// Probability loss that makes a grid unusable.
const TRUNCATION_FATAL: f64 = 1e-4;

/// Medium, sampling grid and γ-series truncation for an optimal-pulse run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalPulseSpec {
    pub params: MediumParams,
    pub grid: TimeGrid,
    pub m_max: usize,
}

impl OptimalPulseSpec {
    /// Default grid for the medium's optical depth.
    pub fn new(params: MediumParams) -> Result<Self> {
        let grid = TimeGrid::default_for(params.optical_depth(), params.t2)?;
        Ok(Self::with_grid(params, grid))
    }

    pub fn with_grid(params: MediumParams, grid: TimeGrid) -> Self {
        OptimalPulseSpec {
            params,
            grid,
            m_max: DEFAULT_M_MAX,
        }
    }
}

/// `-A·Φ(-t)` at a single time.
pub fn optimal_value(p: &MediumParams, t: f64) -> Result<f64> {
    let a = p.norm_const()?;
    Ok(-a * phi(p.b_unchecked(p.length), p.t2, -t))
}

/// Probability of the optimal pulse lying before `t_start`.
pub fn truncated_probability(p: &MediumParams, t_start: f64) -> Result<f64> {
    let a = p.norm_const()?;
    let b = p.b_unchecked(p.length);
    let u0 = (-t_start).max(0.0);
    let period = (2.0 * std::f64::consts::PI * (u0 / b).sqrt()).max(p.t2 / b.max(1e-300));
    let h = (p.t2 / 32.0).min(0.05 * period);
    let span = 40.0 * p.t2;
    let steps = (span / h).ceil() as usize;
    let h = span / steps as f64;
    let tail: f64 = (0..steps)
        .map(|j| phi(b, p.t2, u0 + (j as f64 + 0.5) * h).powi(2))
        .sum::<f64>()
        * h;
    Ok(a * a * tail)
}

/// Samples of the optimal input pulse on `spec.grid`.
///
/// Errors when the grid starts so late that at least `10⁻⁴` of the pulse is lost.
pub fn build_optimal(spec: &OptimalPulseSpec) -> Result<Signal> {
    let p = &spec.params;
    let a = p.norm_const()?;
    let grid = spec.grid;
    let lost = truncated_probability(p, grid.t_start() - 0.5 * grid.dt())?;
    if lost >= TRUNCATION_FATAL {
        let extra = 0.5 * p.t2 * (lost / TRUNCATION_SILENT).ln();
        return Err(Error::WindowTooShort {
            truncated: lost,
            t_start: grid.t_start(),
            required_t_min: (grid.t_start().min(0.0) - extra).floor(),
        });
    }
    if lost >= TRUNCATION_SILENT {
        log::warn!("build_optimal: {lost:.2e} of the pulse lies before the grid start");
    }
    let b = p.b_unchecked(p.length);
    Ok(Signal::from_real_fn(grid, |t| -a * phi(b, p.t2, -t)))
}

/// Closed-form output `F(t, L) = γ(t, L) - F_in(-t)` with γ from the exact series.
pub fn analytic_output(spec: &OptimalPulseSpec) -> Result<Signal> {
    let (out, converged) = analytic_output_with(spec, GammaMethod::Series)?;
    if !converged {
        log::warn!("analytic_output: γ series did not converge everywhere");
    }
    Ok(out)
}

/// As [`analytic_output`] with a choice of γ evaluator; the flag reports series convergence.
pub fn analytic_output_with(
    spec: &OptimalPulseSpec,
    method: GammaMethod,
) -> Result<(Signal, bool)> {
    let p = &spec.params;
    let a = p.norm_const()?;
    let b = p.b_unchecked(p.length);
    let (mut out, converged) = gamma_with(p, &spec.grid, method, spec.m_max)?;
    let grid = spec.grid;
    for (k, v) in out.samples_mut().iter_mut().enumerate() {
        *v += a * phi(b, p.t2, grid.time(k));
    }
    Ok((out, converged))
}

/// Overlap `∫_{τ≤0} Φ(-τ, L) F(τ) dτ` of an input with the medium's kernel.
///
/// Its square is the peak retrieved density; the optimal pulse maximises it
/// among unit-probability inputs.
pub fn matched_overlap(input: &Signal, p: &MediumParams) -> Complex64 {
    let grid = input.grid();
    let w = WindowWeights::new(grid, f64::NEG_INFINITY, 0.0);
    let b = p.b_unchecked(p.length);
    w.range()
        .map(|k| input.samples()[k] * (w.weight(k) * phi(b, p.t2, -grid.time(k))))
        .sum::<Complex64>()
        * grid.dt()
}

/// `∫_{τ≤0} Φ(-τ, L)² dτ` with the quadrature of [`matched_overlap`]: the
/// Cauchy–Schwarz bound on `|overlap|²` for unit-probability inputs.
pub fn kernel_energy(p: &MediumParams, grid: &TimeGrid) -> f64 {
    let w = WindowWeights::new(grid, f64::NEG_INFINITY, 0.0);
    let b = p.b_unchecked(p.length);
    w.range()
        .map(|k| w.weight(k) * phi(b, p.t2, -grid.time(k)).powi(2))
        .sum::<f64>()
        * grid.dt()
}
