//! The resonant absorber: parameters, scalar helpers and transfer kernels.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{bessel_i0_scaled, bessel_i1_scaled, phi_shape};

/// Homogeneously broadened absorber of length `length` and absorption
/// coefficient `alpha`, with coherence time `t2` (`T₁ = T₂/2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MediumParams {
    pub alpha: f64,
    pub length: f64,
    pub t2: f64,
}

impl MediumParams {
    pub fn new(alpha: f64, length: f64, t2: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "absorption coefficient must be non-negative and finite",
            });
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParameter {
                name: "length",
                value: length,
                reason: "medium length must be positive",
            });
        }
        if !(t2 > 0.0) || !t2.is_finite() {
            return Err(Error::InvalidParameter {
                name: "T2",
                value: t2,
                reason: "coherence time must be positive",
            });
        }
        Ok(MediumParams { alpha, length, t2 })
    }

    /// `L = 1`, `T₂ = 1`, `α = αL`.
    pub fn dimensionless(optical_depth: f64) -> Result<Self> {
        Self::new(optical_depth, 1.0, 1.0)
    }

    pub fn t1(&self) -> f64 {
        0.5 * self.t2
    }

    /// `αL`.
    pub fn optical_depth(&self) -> f64 {
        self.alpha * self.length
    }

    /// Same material, different length.
    pub fn with_length(&self, length: f64) -> Result<Self> {
        Self::new(self.alpha, length, self.t2)
    }

    pub(crate) fn check_depth(&self, function: &'static str, x: f64) -> Result<()> {
        let slack = 1e-12 * self.length;
        if x >= -slack && x <= self.length + slack {
            Ok(())
        } else {
            Err(Error::Domain {
                function,
                value: x,
                expected: "0 <= z <= L",
            })
        }
    }

    /// `b(x) = αx/(2T₂)`.
    pub fn b_of(&self, x: f64) -> Result<f64> {
        self.check_depth("b_of", x)?;
        Ok(self.b_unchecked(x))
    }

    #[inline]
    pub(crate) fn b_unchecked(&self, x: f64) -> f64 {
        self.alpha * x / (2.0 * self.t2)
    }

    /// `g(x) = e^{-αx/2}(I₀ + I₁)(αx/2)`.
    pub fn g_of(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain {
                function: "g_of",
                value: x,
                expected: "x >= 0",
            });
        }
        Ok(g_scaled(0.5 * self.alpha * x))
    }

    /// `A(L) = [b(L)(1 - g(L))]^{-1/2}`.
    pub fn norm_const(&self) -> Result<f64> {
        self.norm_const_at(self.length)
    }

    /// `A(x)` for the sub-medium of length `x`.
    pub fn norm_const_at(&self, x: f64) -> Result<f64> {
        let depth = self.alpha * x;
        if !(depth > 0.0) {
            return Err(Error::SingularMedium(depth));
        }
        let b = self.alpha * x / (2.0 * self.t2);
        Ok(1.0 / (b * one_minus_g(0.5 * depth)).sqrt())
    }

    /// Thin-slice transfer `1 - b(dz)·i/(ω + i/T₂)`.
    pub fn transfer_thin(&self, dz: f64, omega: f64) -> Complex64 {
        if self.alpha * dz >= 0.1 {
            log::warn!(
                "transfer_thin: slice optical depth {} is not small",
                self.alpha * dz
            );
        }
        Complex64::new(1.0, 0.0) - self.b_unchecked(dz) * pole(self.t2, omega)
    }

    /// Thick-medium transfer `exp(-b(z)·i/(ω + i/T₂))`.
    pub fn transfer_thick(&self, z: f64, omega: f64) -> Result<Complex64> {
        self.check_depth("transfer_thick", z)?;
        Ok(transfer_exp(self.b_unchecked(z), self.t2, omega))
    }

    /// Regular part `Φ(t, z)` of the impulse response `δ(t) - Φ(t, z)`.
    pub fn impulse_response_regular(&self, z: f64, t: f64) -> Result<f64> {
        self.check_depth("impulse_response_regular", z)?;
        Ok(phi(self.b_unchecked(z), self.t2, t))
    }
}

/// `i/(ω + i/T₂) = 1/(1/T₂ - iω)`.
#[inline]
pub(crate) fn pole(t2: f64, omega: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) / Complex64::new(1.0 / t2, -omega)
}

#[inline]
pub(crate) fn transfer_exp(b: f64, t2: f64, omega: f64) -> Complex64 {
    (-b * pole(t2, omega)).exp()
}

/// `Φ(t) = b·J₁(2√(bt))/√(bt)·θ(t)e^{-t/T₂}` with `θ(0) = 1/2`.
#[inline]
pub(crate) fn phi(b: f64, t2: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let theta = if t == 0.0 { 0.5 } else { 1.0 };
    let shape = phi_shape(b * t).expect("b·t is non-negative");
    theta * b * shape * (-t / t2).exp()
}

fn g_scaled(y: f64) -> f64 {
    // Arguments are validated non-negative by callers.
    bessel_i0_scaled(y).unwrap() + bessel_i1_scaled(y).unwrap()
}

/// `1 - g` at half-depth `y = αx/2`, without cancellation for small `y`.
///
/// Uses `d/dy[e^{-y}(I₀+I₁)(y)] = -e^{-y}I₁(y)/y` and integrates the Taylor
/// series of the right-hand side term by term.
pub(crate) fn one_minus_g(y: f64) -> f64 {
    if y > 0.1 {
        return 1.0 - g_scaled(y);
    }
    const N: usize = 24;
    // I₁(s)/s = Σ_k (s/2)^{2k} / (2·k!(k+1)!)
    let mut i1_over_s = [0.0; N];
    let mut c = 0.5;
    for k in 0..N / 2 {
        i1_over_s[2 * k] = c;
        c /= 4.0 * (k + 1) as f64 * (k + 2) as f64;
    }
    let mut exp_neg = [0.0; N];
    let mut e = 1.0;
    for (j, slot) in exp_neg.iter_mut().enumerate() {
        *slot = e;
        e *= -1.0 / (j + 1) as f64;
    }
    let mut sum = 0.0;
    let mut ypow = y;
    for n in 0..N {
        let coeff: f64 = (0..=n).map(|j| exp_neg[j] * i1_over_s[n - j]).sum();
        sum += coeff * ypow / (n + 1) as f64;
        ypow *= y;
    }
    sum
}

/// A medium truncated at depth `depth`: the operator taking `F(·, 0)` to `F(·, depth)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kernel {
    pub params: MediumParams,
    pub depth: f64,
}

impl Kernel {
    pub fn new(params: MediumParams, depth: f64) -> Result<Self> {
        params.check_depth("Kernel::new", depth)?;
        Ok(Kernel {
            params,
            depth: depth.clamp(0.0, params.length),
        })
    }

    pub fn b(&self) -> f64 {
        self.params.b_unchecked(self.depth)
    }

    pub fn transfer(&self, omega: f64) -> Complex64 {
        transfer_exp(self.b(), self.params.t2, omega)
    }

    pub fn impulse_response_regular(&self, t: f64) -> f64 {
        phi(self.b(), self.params.t2, t)
    }
}

/// `α = 4μ·(atoms per unit length)`.
pub fn alpha_from_geometry(mu: f64, linear_density: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain {
            function: "alpha_from_geometry",
            value: mu,
            expected: "mu > 0",
        });
    }
    if !(linear_density > 0.0) {
        return Err(Error::Domain {
            function: "alpha_from_geometry",
            value: linear_density,
            expected: "linear density > 0",
        });
    }
    Ok(4.0 * mu * linear_density)
}

/// Geometric factor `μ = 3λ²/(8πS)` for wavelength `λ` and beam cross-section `S`.
pub fn geometric_factor(wavelength: f64, area: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::Domain {
            function: "geometric_factor",
            value: wavelength,
            expected: "wavelength > 0",
        });
    }
    if !(area > 0.0) {
        return Err(Error::Domain {
            function: "geometric_factor",
            value: area,
            expected: "area > 0",
        });
    }
    Ok(3.0 * wavelength * wavelength / (8.0 * PI * area))
}
