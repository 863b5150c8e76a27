//! Bessel functions on the non-negative real axis.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn domain(function: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        function,
        value,
        expected,
    }
}

/// Hankel asymptotic amplitudes `P, Q` for order `nu` (`μ = 4ν²`).
fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > last || term.abs() < 1e-17 {
            break;
        }
        last = term.abs();
        // a_k / x^k enters P for even k, Q for odd k, with alternating signs in pairs.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    (p, q)
}

const J1_ASYMPTOTIC_FROM: f64 = 25.0;

/// Bessel function of the first kind `J₁(x)`, `x ≥ 0`.
pub fn bessel_j1(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("bessel_j1", x, "x >= 0"));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x < 1e-8 {
        return Ok(0.5 * x);
    }
    if x > J1_ASYMPTOTIC_FROM {
        let (p, q) = hankel_pq(1.0, x);
        let chi = x - 0.75 * PI;
        return Ok((2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin()));
    }
    Ok(j1_miller(x))
}

/// Backward recurrence normalised by `J₀ + 2ΣJ_{2k} = 1`.
fn j1_miller(x: f64) -> f64 {
    let start = 2 * ((x + 20.0 + (40.0 * x).sqrt()) as usize / 2 + 1);
    let mut j_next = 0.0; // J_{k+1}
    let mut j_k = 1e-300; // J_k
    let mut norm = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / x * j_k - j_next;
        j_next = j_k;
        j_k = j_prev;
        // j_k now holds J_{k-1}
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * j_k;
        }
        if k - 1 == 1 {
            j1 = j_k;
        }
        if j_k.abs() > 1e250 {
            j_k *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    // j_k = J₀ after the loop
    j1 / (norm + j_k)
}

const I_SERIES_UP_TO: f64 = 30.0;

fn i_series(n: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let h2 = h * h;
    let mut term = if n == 0 { 1.0 } else { h };
    let mut sum = term;
    for k in 1..500 {
        term *= h2 / (k as f64 * (k + n as usize) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn i_scaled_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > last || term.abs() < 1e-17 {
            break;
        }
        last = term.abs();
        sum += term;
    }
    sum / (2.0 * PI * x).sqrt()
}

fn check_i(function: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(domain(function, x, "x >= 0"))
    }
}

/// Modified Bessel `I₀(x)`. Overflows to infinity past x ≈ 713; see [`bessel_i0_scaled`].
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_i("bessel_i0", x)?;
    if x <= I_SERIES_UP_TO {
        Ok(i_series(0, x))
    } else {
        Ok(i_scaled_asymptotic(0.0, x) * x.exp())
    }
}

/// Modified Bessel `I₁(x)`.
pub fn bessel_i1(x: f64) -> Result<f64> {
    check_i("bessel_i1", x)?;
    if x <= I_SERIES_UP_TO {
        Ok(i_series(1, x))
    } else {
        Ok(i_scaled_asymptotic(1.0, x) * x.exp())
    }
}

/// `e^{-x} I₀(x)`.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    check_i("bessel_i0_scaled", x)?;
    if x <= I_SERIES_UP_TO {
        Ok(i_series(0, x) * (-x).exp())
    } else {
        Ok(i_scaled_asymptotic(0.0, x))
    }
}

/// `e^{-x} I₁(x)`.
pub fn bessel_i1_scaled(x: f64) -> Result<f64> {
    check_i("bessel_i1_scaled", x)?;
    if x <= I_SERIES_UP_TO {
        Ok(i_series(1, x) * (-x).exp())
    } else {
        Ok(i_scaled_asymptotic(1.0, x))
    }
}

/// `e^{x} K_{m-1/2}(x)` by upward recurrence from the closed form of `K_{1/2}`.
pub fn bessel_k_half_scaled(m: u32, x: f64) -> Result<f64> {
    if m == 0 {
        return Err(domain("bessel_k_half", 0.0, "order index m >= 1"));
    }
    if !(x > 0.0) {
        return Err(domain("bessel_k_half", x, "x > 0"));
    }
    let k_half = (PI / (2.0 * x)).sqrt();
    let mut prev = k_half; // K_{-1/2} = K_{1/2}
    let mut cur = k_half;
    for j in 1..m {
        let nu = j as f64 - 0.5;
        let next = prev + 2.0 * nu / x * cur;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Modified Bessel function of the second kind at half-integer order, `K_{m-1/2}(x)`.
pub fn bessel_k_half(m: u32, x: f64) -> Result<f64> {
    Ok(bessel_k_half_scaled(m, x)? * (-x).exp())
}

const PHI_SERIES_BELOW: f64 = 1e-4;

/// `J₁(2√u)/√u`, equal to 1 at `u = 0`.
pub fn phi_shape(u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(domain("phi_shape", u, "u >= 0"));
    }
    if u < PHI_SERIES_BELOW {
        // Σ (-u)^k / (k!(k+1)!)
        return Ok(1.0 - u / 2.0 * (1.0 - u / 6.0 * (1.0 - u / 12.0)));
    }
    let s = u.sqrt();
    Ok(bessel_j1(2.0 * s)? / s)
}
