//! The residual field γ(t, L) transmitted around the write moment.
//!
//! The Bessel series for γ alternates with terms as large as `e^{2b}`, so it
//! is summed exactly in binary fixed point: with `x = |t|/T₂`, `β = αL/2`,
//!
//! ```text
//! γ = (A/T₂) e^{-x} Σ_{m≥1} (-1)^m p_m,   p_m = β^m θ_{m-1}(x) / (m!(m-1)!)
//! ```
//!
//! where `θ_k` are the reverse Bessel polynomials. All `p_m` are positive and
//! obey a three-term recurrence whose coefficients are exact dyadic rationals
//! once `β` and `x` are rounded to `f64`.

use std::f64::consts::{LOG2_E, PI};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::medium::MediumParams;
use crate::signal::{inverse_transform, Signal, Spectrum, TimeGrid};

/// Default truncation of the γ series.
pub const DEFAULT_M_MAX: usize = 20_000;

/// Absolute accuracy target of the series sum, in units of `A/T₂`, is `2^-ACCURACY_BITS`.
const ACCURACY_BITS: f64 = 90.0;

/// Result of a γ-series evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaSeries {
    pub value: f64,
    pub terms_used: usize,
    /// False when `m_max` terms were not enough to reach the accuracy target.
    pub converged: bool,
}

/// Which evaluator to use for γ on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GammaMethod {
    /// Exact series, `O(n·b)` big-number work.
    Series,
    /// Spectral inversion of `A(H(ω)H(-ω) - 1)/√(2π)`, `O(n log n)`.
    Spectral,
}

fn dyadic(v: f64) -> (u64, i64) {
    debug_assert!(v.is_finite() && v >= 0.0);
    let bits = v.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), raw_exp - 1075)
    };
    if mant == 0 {
        return (0, 0);
    }
    let tz = mant.trailing_zeros();
    (mant >> tz, exp + tz as i64)
}

fn shift(n: &mut BigUint, exp: i64) {
    if exp >= 0 {
        *n <<= exp as usize;
    } else {
        *n >>= (-exp) as usize;
    }
}

fn ldexp(mut v: f64, mut e: i64) -> f64 {
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}

fn to_f64_scaled(n: &BigUint, frac_bits: i64) -> f64 {
    let bits = n.bits() as i64;
    if bits <= 64 {
        return ldexp(n.to_f64().unwrap_or(0.0), -frac_bits);
    }
    let drop = bits - 64;
    let top = (n >> drop as usize).to_f64().unwrap_or(0.0);
    ldexp(top, drop - frac_bits)
}

struct Plan {
    terms: usize,
    converged: bool,
    frac_bits: i64,
}

/// Locate the largest term and the stopping index with a rescaled `f64` pass.
fn plan(beta: f64, x: f64, m_max: usize) -> Plan {
    let target = x * LOG2_E - ACCURACY_BITS;
    let scale_step = 2f64.powi(500);
    let mut off = 0.0f64;
    let mut prev = beta;
    let mut cur = beta * beta * (x + 1.0) / 2.0;
    let log2 = |v: f64, off: f64| v.log2() + off;
    let mut log2_max = log2(prev, 0.0).max(log2(cur, 0.0));
    let mut log2_min_before_peak = log2(prev, 0.0).min(log2(cur, 0.0));
    let mut peaked = cur < prev;
    let mut m = 2usize;
    let mut converged = m_max <= 1 && log2(prev, 0.0) < target;
    if m_max >= 2 {
        loop {
            let l = log2(cur, off);
            if peaked && l < target {
                converged = true;
                break;
            }
            if m >= m_max {
                break;
            }
            let mf = m as f64;
            let next = (beta * (2.0 * mf - 1.0) * cur
                + beta * beta * x * x * prev / (mf * (mf - 1.0)))
                / (mf * (mf + 1.0));
            prev = cur;
            cur = next;
            m += 1;
            if cur > scale_step {
                cur /= scale_step;
                prev /= scale_step;
                off += 500.0;
            }
            let l = log2(cur, off);
            if cur < prev {
                peaked = true;
            }
            if !peaked {
                log2_min_before_peak = log2_min_before_peak.min(l);
            }
            log2_max = log2_max.max(l);
        }
    }
    let terms = m.min(m_max.max(1));
    // Rounding errors made at the smallest pre-peak term are amplified to the
    // size of the largest one by the (dominant) recurrence.
    let amplification = (log2_max - log2_min_before_peak).max(0.0);
    let frac_bits = (amplification - target + (terms as f64).log2() + 16.0)
        .ceil()
        .max(64.0) as i64;
    Plan {
        terms,
        converged,
        frac_bits,
    }
}

/// Exact evaluation of `Σ (-1)^m p_m` to `plan.terms` terms, returned as `f64`.
fn series_sum(beta: f64, x: f64, plan: &Plan) -> f64 {
    let fb = plan.frac_bits;
    let (mb, eb) = dyadic(beta);
    let (mx, ex) = dyadic(x);
    let mbx = mb as u128 * mx as u128;
    let ebx = eb + ex;

    let mul_beta = |n: &BigUint| -> BigUint {
        let mut r = n * mb;
        shift(&mut r, eb);
        r
    };

    let mut p1 = BigUint::from(mb);
    shift(&mut p1, eb + fb);
    let mut even = BigUint::zero();
    let mut odd = p1.clone();
    if plan.terms >= 2 {
        // p₂ = β²(x + 1)/2
        let t = mul_beta(&p1);
        let mut tx = &t * mx;
        shift(&mut tx, ex);
        let mut p2 = t + tx;
        p2 >>= 1usize;
        even += &p2;

        let mut prev = p1;
        let mut cur = p2;
        for m in 2..plan.terms as u64 {
            let lead = m * (m - 1);
            let mut a = mul_beta(&cur) * ((2 * m - 1) * lead);
            if x > 0.0 {
                let mut b = &prev * mbx * mbx;
                shift(&mut b, 2 * ebx);
                a += b;
            }
            let next = a / (lead * m * (m + 1));
            if (m + 1) % 2 == 0 {
                even += &next;
            } else {
                odd += &next;
            }
            prev = cur;
            cur = next;
        }
    }
    if even >= odd {
        to_f64_scaled(&(even - odd), fb)
    } else {
        -to_f64_scaled(&(odd - even), fb)
    }
}

/// γ(t, L) from its Bessel series, summed without cancellation loss.
///
/// `t = 0` is evaluated directly (the series is regular there).
pub fn gamma_series(p: &MediumParams, t: f64, m_max: usize) -> Result<GammaSeries> {
    let a = p.norm_const()?;
    let beta = 0.5 * p.optical_depth();
    let x = (t / p.t2).abs();
    let plan = plan(beta, x, m_max.max(1));
    let sum = series_sum(beta, x, &plan);
    Ok(GammaSeries {
        value: a / p.t2 * (-x).exp() * sum,
        terms_used: plan.terms,
        converged: plan.converged,
    })
}

/// Closed-form large-depth approximation `-√b·g/√(1-g)·exp(-|t|√(αL)/T₂)`.
pub fn gamma_asymptotic(p: &MediumParams, t: f64) -> f64 {
    let b = p.b_unchecked(p.length);
    let g = p.g_of(p.length).unwrap_or(1.0);
    -b.sqrt() * g / (1.0 - g).sqrt() * (-t.abs() * p.optical_depth().sqrt() / p.t2).exp()
}

/// Series values of γ on every grid point, with a flag that all converged.
///
/// Symmetric grids evaluate one half and mirror it.
pub fn gamma_on_grid(p: &MediumParams, grid: &TimeGrid, m_max: usize) -> Result<(Signal, bool)> {
    p.norm_const()?;
    let n = grid.len();
    let (first, mirrored) = if grid.is_symmetric() {
        (n / 2, true)
    } else {
        (0, false)
    };
    let half: Vec<GammaSeries> = (first..n)
        .into_par_iter()
        .map(|k| gamma_series(p, grid.time(k), m_max))
        .collect::<Result<_>>()?;
    let converged = half.iter().all(|g| g.converged);
    if !converged {
        log::warn!("gamma_on_grid: series truncated at m_max = {m_max} for some samples");
    }
    let mut values = vec![0.0; n];
    for (k, g) in (first..n).zip(&half) {
        values[k] = g.value;
        if mirrored {
            values[n - 1 - k] = g.value;
        }
    }
    Ok((Signal::from_real_samples(*grid, &values), converged))
}

/// γ on a grid by spectral inversion with the slowly decaying part
/// `-A·b·e^{-|t|/T₂}` removed analytically.
pub fn gamma_spectral(p: &MediumParams, grid: &TimeGrid) -> Result<Signal> {
    let a = p.norm_const()?;
    let b = p.b_unchecked(p.length);
    let beta = b * p.t2;
    let n = grid.len();
    let size = (2 * n).next_power_of_two();
    let offset = (size - n) / 2;
    let padded = TimeGrid::new(grid.t_start() - offset as f64 * grid.dt(), grid.dt(), size)?;
    let t2 = p.t2;
    let pref = a / (2.0 * PI).sqrt();
    let spectrum = Spectrum::from_fn(&padded, |w| {
        let x = 2.0 * beta / (1.0 + w * w * t2 * t2);
        // e^{-x} - 1 + x
        let r = if x < 1e-4 {
            x * x * (0.5 - x / 6.0 + x * x / 24.0)
        } else {
            x + (-x).exp_m1()
        };
        (pref * r).into()
    });
    let smooth = inverse_transform(&spectrum)?;
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let t = grid.time(k);
            smooth.samples()[offset + k].re - a * b * (-t.abs() / t2).exp()
        })
        .collect();
    Ok(Signal::from_real_samples(*grid, &values))
}

/// γ on a grid with the chosen evaluator; the flag is always true for [`GammaMethod::Spectral`].
pub fn gamma_with(
    p: &MediumParams,
    grid: &TimeGrid,
    method: GammaMethod,
    m_max: usize,
) -> Result<(Signal, bool)> {
    match method {
        GammaMethod::Series => gamma_on_grid(p, grid, m_max),
        GammaMethod::Spectral => Ok((gamma_spectral(p, grid)?, true)),
    }
}
