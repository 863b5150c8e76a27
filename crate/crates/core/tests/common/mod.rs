//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use absorber_core::Signal;

/// Fractional bits of the fixed-point oracles.
const FRAC: u32 = 400;

fn to_fixed(x: f64) -> BigInt {
    assert!(x.is_finite() && x >= 0.0);
    if x == 0.0 {
        return BigInt::zero();
    }
    // x = m · 2^e exactly.
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let (m, e) = if exp == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    let shift = FRAC as i32 + e;
    let m = BigInt::from(m);
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

fn to_f64(v: &BigInt) -> f64 {
    let bits = v.bits() as i64;
    let drop = (bits - 64).max(0);
    let top = (v >> drop as usize).to_f64().unwrap();
    top * 2f64.powi((drop - FRAC as i64) as i32)
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> FRAC as usize
}

/// `Σ_k s^k (x/2)^{2k+ν} / (k!(k+ν)!)` for ν ∈ {0, 1} and sign `s`, in fixed point.
fn bessel_series(x: f64, nu: u32, alternating: bool) -> BigInt {
    let xf = to_fixed(x);
    let q = mul(&xf, &xf) >> 2usize;
    let mut term = if nu == 0 {
        BigInt::one() << FRAC as usize
    } else {
        &xf >> 1usize
    };
    let mut sum = term.clone();
    let mut k: u64 = 0;
    loop {
        k += 1;
        term = mul(&term, &q) / BigInt::from(k * (k + nu as u64));
        if term.is_zero() {
            break;
        }
        if alternating && k % 2 == 1 {
            sum -= &term;
        } else {
            sum += &term;
        }
    }
    sum
}

fn exp_fixed(x: f64) -> BigInt {
    let xf = to_fixed(x);
    let mut term = BigInt::one() << FRAC as usize;
    let mut sum = term.clone();
    let mut k: u64 = 0;
    loop {
        k += 1;
        term = mul(&term, &xf) / BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    sum
}

pub fn j1(x: f64) -> f64 {
    to_f64(&bessel_series(x, 1, true))
}

pub fn i0(x: f64) -> f64 {
    to_f64(&bessel_series(x, 0, false))
}

pub fn i1(x: f64) -> f64 {
    to_f64(&bessel_series(x, 1, false))
}

fn scaled(x: f64, nu: u32) -> f64 {
    let num = bessel_series(x, nu, false) << FRAC as usize;
    let v = num / exp_fixed(x);
    to_f64(&v)
}

pub fn i0_scaled(x: f64) -> f64 {
    scaled(x, 0)
}

pub fn i1_scaled(x: f64) -> f64 {
    scaled(x, 1)
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// `‖a - b‖₂ / ‖b‖₂` over samples.
pub fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `dt·Σ_j s_j k_{i-j}` by the definition.
pub fn direct_convolution(s: &Signal, k: &Signal) -> Vec<Complex64> {
    let (a, b) = (s.samples(), k.samples());
    let mut out = vec![Complex64::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    let dt = s.grid().dt();
    out.iter().map(|v| v * dt).collect()
}

/// Sanity of the oracle itself against textbook values.
pub fn oracle_self_check() {
    assert!((j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-16);
    assert!((i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
    assert!((i0_scaled(50.0) - 0.056_561_626_647_454_19).abs() < 1e-16);
}

/// `K_{m-1/2}(x)` from its terminating closed form (all terms positive).
pub fn k_half_closed(m: u32, x: f64) -> f64 {
    let n = (m - 1) as u64;
    let mut sum = 0.0;
    let mut coef = 1.0; // (n+k)! / (k!(n-k)!)
    for k in 0..=n {
        if k > 0 {
            coef *= ((n + k) * (n - k + 1)) as f64 / k as f64;
        }
        sum += coef / (2.0 * x).powi(k as i32);
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() * sum
}
