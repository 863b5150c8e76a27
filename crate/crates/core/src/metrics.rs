//! Storage metrics for a propagated pulse and their large-depth asymptotics.
//!
//! Every split at `t = 0` uses the half-weight convention for a sample that
//! falls exactly on the boundary.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::MediumParams;
use crate::propagation::{atomic_amplitude, propagate, DepthGrid, ExcitationProfile};
use crate::signal::{probability, Signal};

/// Rule used by [`first_burst_fraction`]; echoed in reports.
pub const BURST_RULE: &str = "burst = [0, t1], t1 = first zero crossing of the output amplitude \
(projected on its phase at the post-zero peak) after that peak; dips shallower than 1e-6 of the \
peak amplitude are treated as numerical noise; fraction = P(0, t1) / P(0, inf)";

/// Negative excursions below this fraction of the peak amplitude do not end a burst.
const BURST_NOISE_FLOOR: f64 = 1e-6;

/// Numerator pieces and ratios of the retrieval efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyBreakdown {
    /// `[P_out(t > 0) - P_out(t < 0)] / P_in(t < 0)`.
    pub efficiency: f64,
    pub emitted_after_zero: f64,
    pub leak_before_zero: f64,
    pub input_before_zero: f64,
    /// `P_out(t > 0) / P_in(t < 0)` with no leak penalty.
    pub plain_ratio: f64,
}

pub fn efficiency(input: &Signal, output: &Signal) -> Result<EfficiencyBreakdown> {
    let input_before_zero = probability(input, f64::NEG_INFINITY, 0.0).value;
    if !(input_before_zero > 0.0) {
        return Err(Error::UndefinedEfficiency);
    }
    let emitted_after_zero = probability(output, 0.0, f64::INFINITY).value;
    let leak_before_zero = probability(output, f64::NEG_INFINITY, 0.0).value;
    Ok(EfficiencyBreakdown {
        efficiency: (emitted_after_zero - leak_before_zero) / input_before_zero,
        emitted_after_zero,
        leak_before_zero,
        input_before_zero,
        plain_ratio: emitted_after_zero / input_before_zero,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticEfficiency {
    pub value: f64,
    /// `αL > 16/π`; below that the formula goes negative.
    pub in_regime: bool,
}

/// `1 - 4/√(π·αL)`.
pub fn efficiency_asymptotic(p: &MediumParams) -> AsymptoticEfficiency {
    let d = p.optical_depth();
    AsymptoticEfficiency {
        value: 1.0 - 4.0 / (PI * d).sqrt(),
        in_regime: d > 16.0 / PI,
    }
}

/// `∫|c'|² dz` over the profile's depth points.
pub fn absorption_probability(profile: &ExcitationProfile) -> f64 {
    profile.probability()
}

/// `1 - 2/√(π·αL) + 1/(π√(αL))`.
pub fn p_abs_closed(p: &MediumParams) -> f64 {
    let d = p.optical_depth();
    1.0 - 2.0 / (PI * d).sqrt() + 1.0 / (PI * d.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BurstFraction {
    pub fraction: f64,
    /// End of the burst; `None` when no crossing follows the peak.
    pub end_time: Option<f64>,
    pub peak_time: f64,
    pub crossing_found: bool,
}

/// Share of the `t > 0` probability carried by the first lobe.
pub fn first_burst_fraction(output: &Signal) -> Result<BurstFraction> {
    let grid = output.grid();
    let after = probability(output, 0.0, f64::INFINITY).value;
    let first = (0..grid.len()).find(|&k| grid.time(k) >= 0.0);
    let (first, after) = match first {
        Some(k) if after > 0.0 => (k, after),
        _ => {
            return Err(Error::Configuration(
                "first_burst_fraction: output has no probability after t = 0".into(),
            ))
        }
    };
    let s = output.samples();
    let peak = (first..s.len())
        .max_by(|&a, &b| s[a].norm_sqr().total_cmp(&s[b].norm_sqr()))
        .unwrap_or(first);
    let rot = Complex64::from_polar(1.0, -s[peak].arg());
    let proj = |k: usize| (s[k] * rot).re;
    let floor = BURST_NOISE_FLOOR * s[peak].norm();
    let crossing = (peak..s.len())
        .find(|&k| proj(k) < -floor)
        .map(|j| (peak..j).rev().find(|&k| proj(k) > 0.0).unwrap_or(peak));
    Ok(match crossing {
        Some(k) => {
            let (a, b) = (proj(k), proj(k + 1));
            let t1 = grid.time(k) + grid.dt() * a / (a - b);
            BurstFraction {
                fraction: probability(output, 0.0, t1).value / after,
                end_time: Some(t1),
                peak_time: grid.time(peak),
                crossing_found: true,
            }
        }
        None => BurstFraction {
            fraction: 1.0,
            end_time: None,
            peak_time: grid.time(peak),
            crossing_found: false,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flatness {
    /// Coefficient of variation of `|c'|` over `[0, L - width]`.
    pub cv: f64,
    pub boundary_layer_width: f64,
    /// Median of `|c'|` over `[0, L/2]`.
    pub plateau: f64,
    /// `|c'(L)| / plateau`.
    pub dip_factor: f64,
}

pub fn flatness_metrics(profile: &ExcitationProfile) -> Flatness {
    let z = &profile.z;
    let mag = profile.magnitudes();
    let n = z.len();
    let l = profile.length;
    let mut front: Vec<f64> = z
        .iter()
        .zip(&mag)
        .filter(|(zi, _)| **zi <= 0.5 * l)
        .map(|(_, m)| *m)
        .collect();
    if front.is_empty() || n == 0 {
        return Flatness {
            cv: 0.0,
            boundary_layer_width: 0.0,
            plateau: 0.0,
            dip_factor: 1.0,
        };
    }
    front.sort_by(f64::total_cmp);
    let mid = front.len() / 2;
    let plateau = if front.len() % 2 == 1 {
        front[mid]
    } else {
        0.5 * (front[mid - 1] + front[mid])
    };
    let dip = plateau - mag[n - 1];
    let dip_factor = if plateau > 0.0 {
        mag[n - 1] / plateau
    } else {
        1.0
    };

    let mut width = 0.0;
    if dip > 1e-12 * plateau {
        let half = 0.5 * dip;
        let excess = |i: usize| plateau - mag[i] - half;
        let mut edge = z[0];
        for i in (0..n - 1).rev() {
            if excess(i) <= 0.0 {
                let (a, b) = (excess(i), excess(i + 1));
                edge = z[i] + (z[i + 1] - z[i]) * (-a) / (b - a);
                break;
            }
        }
        width = z[n - 1] - edge;
    }

    let cut = z[n - 1] - width;
    let (mut w_sum, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..n.saturating_sub(1) {
        if z[i + 1] > cut + 1e-12 * l {
            break;
        }
        let h = 0.5 * (z[i + 1] - z[i]);
        for j in [i, i + 1] {
            w_sum += h;
            m1 += h * mag[j];
            m2 += h * mag[j] * mag[j];
        }
    }
    let cv = if w_sum > 0.0 && m1 > 0.0 {
        let mean = m1 / w_sum;
        ((m2 / w_sum - mean * mean).max(0.0)).sqrt() / mean
    } else {
        0.0
    };
    Flatness {
        cv,
        boundary_layer_width: width,
        plateau,
        dip_factor,
    }
}

/// Everything reported for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub optical_depth: f64,
    pub efficiency: f64,
    pub efficiency_asymptotic: f64,
    pub efficiency_asymptotic_in_regime: bool,
    pub plain_ratio: f64,
    pub input_before_zero: f64,
    pub emitted_after_zero: f64,
    pub leak_before_zero: f64,
    pub p_abs: f64,
    pub p_abs_closed: f64,
    /// `(1 - p_abs) + leak`: photons gone before the write moment, counted as in the efficiency.
    pub loss_before_zero: f64,
    /// `p_abs - P_out(t > 0)`.
    pub loss_after_zero: f64,
    pub first_burst_fraction: f64,
    pub burst_end_time: Option<f64>,
    pub burst_crossing_found: bool,
    pub burst_rule: &'static str,
    /// Largest `|F_out|²` after `t = 0` and where it occurs.
    pub peak_density: f64,
    pub peak_time: f64,
    pub flatness_cv: f64,
    pub boundary_layer_width: f64,
    pub plateau: f64,
    pub dip_factor: f64,
}

/// Output field, write-moment excitation profile and metrics.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub output: Signal,
    pub profile: ExcitationProfile,
    pub report: MetricsReport,
}

/// Propagates `input` through the whole medium and evaluates every metric.
pub fn simulate(input: &Signal, p: &MediumParams, z_grid: &DepthGrid) -> Result<Simulation> {
    input.check_finite()?;
    let output = propagate(input, p, p.length)?;
    let profile = atomic_amplitude(input, p, z_grid, 0.0)?;
    let report = report_for(input, &output, &profile, p)?;
    Ok(Simulation {
        output,
        profile,
        report,
    })
}

/// Assembles a [`MetricsReport`] from already computed fields.
pub fn report_for(
    input: &Signal,
    output: &Signal,
    profile: &ExcitationProfile,
    p: &MediumParams,
) -> Result<MetricsReport> {
    let e = efficiency(input, output)?;
    let asym = efficiency_asymptotic(p);
    let p_abs = absorption_probability(profile);
    let burst = first_burst_fraction(output)?;
    let flat = flatness_metrics(profile);
    let peak = output.samples()[output.grid().times().position(|t| t >= 0.0).unwrap_or(0)..]
        .iter()
        .map(|s| s.norm_sqr())
        .fold(0.0, f64::max);
    Ok(MetricsReport {
        optical_depth: p.optical_depth(),
        efficiency: e.efficiency,
        efficiency_asymptotic: asym.value,
        efficiency_asymptotic_in_regime: asym.in_regime,
        plain_ratio: e.plain_ratio,
        input_before_zero: e.input_before_zero,
        emitted_after_zero: e.emitted_after_zero,
        leak_before_zero: e.leak_before_zero,
        p_abs,
        p_abs_closed: p_abs_closed(p),
        loss_before_zero: (e.input_before_zero - p_abs) + e.leak_before_zero,
        loss_after_zero: p_abs - e.emitted_after_zero,
        first_burst_fraction: burst.fraction,
        burst_end_time: burst.end_time,
        burst_crossing_found: burst.crossing_found,
        burst_rule: BURST_RULE,
        peak_density: peak,
        peak_time: burst.peak_time,
        flatness_cv: flat.cv,
        boundary_layer_width: flat.boundary_layer_width,
        plateau: flat.plateau,
        dip_factor: flat.dip_factor,
    })
}
