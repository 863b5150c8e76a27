//! Fields and atomic excitation inside the medium.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{phi, pole, MediumParams};
use crate::optimal::{gamma_with, GammaMethod, DEFAULT_M_MAX};
use crate::signal::{
    convolve, forward_transform, inverse_transform, lattice_phase, Signal, TimeGrid, WindowWeights,
};

/// `F(ω, z) = F_in(ω)·H(ω, z)`.
///
/// The input is zero-padded on the right to at least twice its length so the
/// delayed response does not wrap around.
pub fn propagate(input: &Signal, p: &MediumParams, z: f64) -> Result<Signal> {
    p.check_depth("propagate", z)?;
    if z <= 0.0 {
        return Ok(input.clone());
    }
    let n = input.len();
    let size = (2 * n).next_power_of_two();
    let mut samples = input.samples().to_vec();
    samples.resize(size, Complex64::new(0.0, 0.0));
    let padded = Signal::new(input.grid().extended(size - n), samples)?;
    let mut spectrum = forward_transform(&padded)?;
    let b = p.b_unchecked(z);
    let t2 = p.t2;
    let nyquist_bin = size.is_multiple_of(2);
    for (k, s) in spectrum.samples_mut().iter_mut().enumerate() {
        let w = (k as f64 - (size / 2) as f64) * 2.0 * PI / (size as f64 * input.grid().dt());
        let mut h = (-b * pole(t2, w)).exp();
        if nyquist_bin && k == 0 {
            // The Nyquist bin stands for ±ω at once; keep real inputs real.
            h = Complex64::new(h.re, 0.0);
        }
        *s *= h;
    }
    let out = inverse_transform(&spectrum)?;
    let mut samples = out.into_samples();
    samples.truncate(n);
    Signal::new(*input.grid(), samples)
}

/// Depth points `0 ≤ z₀ < z₁ < … ≤ L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthGrid {
    length: f64,
    points: Vec<f64>,
}

impl DepthGrid {
    pub fn uniform(length: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "z_points",
                value: n as f64,
                reason: "a depth grid needs at least two points",
            });
        }
        let h = length / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        points[n - 1] = length;
        Ok(DepthGrid { length, points })
    }

    /// `n` uniform points refined four-fold over the last
    /// `min(L, 3·2ln2/√(αL)·L)`, where the far-end boundary layer lives.
    pub fn refined_for(p: &MediumParams, n: usize) -> Result<Self> {
        let coarse = DepthGrid::uniform(p.length, n)?;
        let depth = p.optical_depth().max(1e-300);
        let layer = (3.0 * 2.0 * LN_2 / depth.sqrt()).min(1.0) * p.length;
        let h = p.length / (n - 1) as f64;
        let fine_cells = ((layer / h).ceil() as usize).min(n - 1);
        let start = n - 1 - fine_cells;
        let mut points: Vec<f64> = coarse.points[..=start].to_vec();
        for j in 1..=4 * fine_cells {
            points.push((4 * start + j) as f64 * h / 4.0);
        }
        let last = points.len() - 1;
        points[last] = p.length;
        Ok(DepthGrid {
            length: p.length,
            points,
        })
    }

    /// The default: 512 points with boundary-layer refinement.
    pub fn default_for(p: &MediumParams) -> Result<Self> {
        Self::refined_for(p, 512)
    }

    pub fn from_points(length: f64, points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Configuration("depth grid is empty".into()));
        }
        for w in points.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Configuration(
                    "depth points must be strictly increasing".into(),
                ));
            }
        }
        let slack = 1e-12 * length;
        if points[0] < -slack || points[points.len() - 1] > length + slack {
            return Err(Error::Domain {
                function: "DepthGrid::from_points",
                value: if points[0] < 0.0 {
                    points[0]
                } else {
                    points[points.len() - 1]
                },
                expected: "0 <= z <= L",
            });
        }
        Ok(DepthGrid { length, points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Common spacing, if the points are uniform.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let h =
            (self.points[self.points.len() - 1] - self.points[0]) / (self.points.len() - 1) as f64;
        self.points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
            .then_some(h)
    }
}

/// Atomic amplitude density `c'(t, z)` (units length^{-1/2}) over depth at a fixed time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcitationProfile {
    pub time: f64,
    pub length: f64,
    pub z: Vec<f64>,
    #[serde(skip)]
    pub c: Vec<Complex64>,
}

impl ExcitationProfile {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.c.iter().map(|c| c.norm()).collect()
    }

    /// `∫|c'|² dz` by the trapezoid rule over the depth points.
    pub fn probability(&self) -> f64 {
        self.z
            .windows(2)
            .zip(self.c.windows(2))
            .map(|(z, c)| 0.5 * (z[1] - z[0]) * (c[0].norm_sqr() + c[1].norm_sqr()))
            .sum()
    }
}

/// `√(α/2T₂)·∫₀^∞ F(t-τ, z) e^{-τ/T₂} dτ` for every depth.
///
/// Evaluated in the frequency domain of the unpadded input grid: the
/// τ-integral becomes the exact discrete kernel of the midpoint (or, when `t`
/// is a sample, trapezoid) sum, and `H(ω, z)` is advanced multiplicatively
/// along increasing depth.
pub fn atomic_amplitude(
    input: &Signal,
    p: &MediumParams,
    z_grid: &DepthGrid,
    t: f64,
) -> Result<ExcitationProfile> {
    for &z in z_grid.points() {
        p.check_depth("atomic_amplitude", z)?;
    }
    let grid = *input.grid();
    let n = grid.len();
    let dt = grid.dt();
    let zeros = ExcitationProfile {
        time: t,
        length: p.length,
        z: z_grid.points().to_vec(),
        c: vec![Complex64::new(0.0, 0.0); z_grid.len()],
    };
    let prefactor = (p.alpha / (2.0 * p.t2)).sqrt();
    let x = (t - grid.t_start()) / dt;
    if prefactor == 0.0 || x < -1e-9 {
        return Ok(zeros);
    }
    let k_star = ((x + 1e-9).floor() as usize).min(n - 1);
    let tau0 = t - grid.time(k_star);
    let on_sample = tau0.abs() <= 1e-9 * dt;
    let tau0 = if on_sample { 0.0 } else { tau0 };

    let spectrum = forward_transform(input)?;
    let rate = 1.0 / p.t2;
    let half = (n / 2) as f64;
    let origin_steps = grid.t_start() / dt;
    let d_omega = spectrum.d_omega();
    let decay0 = (-rate * tau0).exp();
    let weights: Vec<Complex64> = spectrum
        .samples()
        .iter()
        .enumerate()
        .map(|(q, xq)| {
            let w = (q as f64 - half) * d_omega;
            let geometric = Complex64::new(1.0, 0.0)
                / (Complex64::new(1.0, 0.0) - Complex64::new(-rate * dt, w * dt).exp());
            let kernel = dt * decay0 * (geometric - if on_sample { 0.5 } else { 0.0 });
            let phase = lattice_phase(q as f64 - half, origin_steps + k_star as f64, n, -1.0);
            xq * phase * kernel * (d_omega / (2.0 * PI).sqrt())
        })
        .collect();
    let poles: Vec<Complex64> = (0..n)
        .map(|q| pole(p.t2, (q as f64 - half) * d_omega))
        .collect();

    let mut c = Vec::with_capacity(z_grid.len());
    let mut h: Vec<Complex64> = Vec::new();
    let mut last_z = 0.0;
    let mut steps: HashMap<i64, Vec<Complex64>> = HashMap::new();
    for (i, &z) in z_grid.points().iter().enumerate() {
        if i == 0 {
            let b = p.b_unchecked(z);
            h = poles.iter().map(|pl| (-b * pl).exp()).collect();
        } else {
            let dz = z - last_z;
            let key = (dz / p.length * 2f64.powi(40)).round() as i64;
            if steps.len() > 8 && !steps.contains_key(&key) {
                steps.clear();
            }
            let step = steps.entry(key).or_insert_with(|| {
                let db = p.b_unchecked(dz);
                poles.iter().map(|pl| (-db * pl).exp()).collect()
            });
            for (hq, sq) in h.iter_mut().zip(step.iter()) {
                *hq *= sq;
            }
        }
        last_z = z;
        let sum: Complex64 = weights.iter().zip(&h).map(|(w, hq)| w * hq).sum();
        c.push(prefactor * sum);
    }
    Ok(ExcitationProfile { c, ..zeros })
}

/// Same quantity as [`atomic_amplitude`] by propagating to every depth and
/// summing the causal exponential kernel in the time domain.
pub fn atomic_amplitude_time_domain(
    input: &Signal,
    p: &MediumParams,
    z_grid: &DepthGrid,
    t: f64,
) -> Result<ExcitationProfile> {
    let grid = *input.grid();
    let w = WindowWeights::new(&grid, f64::NEG_INFINITY, t);
    let prefactor = (p.alpha / (2.0 * p.t2)).sqrt();
    let mut c = Vec::with_capacity(z_grid.len());
    for &z in z_grid.points() {
        let f = propagate(input, p, z)?;
        let sum: Complex64 = w
            .range()
            .map(|k| f.samples()[k] * (w.weight(k) * (-(t - grid.time(k)) / p.t2).exp()))
            .sum();
        c.push(prefactor * sum * grid.dt());
    }
    Ok(ExcitationProfile {
        time: t,
        length: p.length,
        z: z_grid.points().to_vec(),
        c,
    })
}

/// `c'(t, z) = -√(2T₂/α)·∂F(t, z)/∂z` by finite differences of propagated
/// fields on a uniform depth grid (central inside, second-order one-sided at
/// the ends). `F(t, z)` between samples is linearly interpolated, which at a
/// cell boundary is the average of the two neighbours.
pub fn atomic_amplitude_fd(
    input: &Signal,
    p: &MediumParams,
    z_grid: &DepthGrid,
    t: f64,
) -> Result<ExcitationProfile> {
    let h = z_grid.uniform_step().ok_or_else(|| {
        Error::Configuration("finite differences need a uniform depth grid".into())
    })?;
    if z_grid.len() < 3 {
        return Err(Error::Configuration(
            "finite differences need at least three depth points".into(),
        ));
    }
    if p.alpha == 0.0 {
        return Ok(ExcitationProfile {
            time: t,
            length: p.length,
            z: z_grid.points().to_vec(),
            c: vec![Complex64::new(0.0, 0.0); z_grid.len()],
        });
    }
    let f: Vec<Complex64> = z_grid
        .points()
        .iter()
        .map(|&z| propagate(input, p, z).map(|s| s.value_at(t)))
        .collect::<Result<_>>()?;
    let m = f.len();
    let scale = -(2.0 * p.t2 / p.alpha).sqrt();
    let c = (0..m)
        .map(|i| {
            let d = if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if i == m - 1 {
                (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * h)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            };
            scale * d
        })
        .collect();
    Ok(ExcitationProfile {
        time: t,
        length: p.length,
        z: z_grid.points().to_vec(),
        c,
    })
}

/// Large-depth profile `-A√b/√L·[1 - e^{-α(L-z)/(2√(αL))}/√π]` at `t = 0`.
pub fn atomic_amplitude_closed(p: &MediumParams, z: f64) -> Result<f64> {
    p.check_depth("atomic_amplitude_closed", z)?;
    let a = p.norm_const()?;
    let b = p.b_unchecked(p.length);
    let dip = (-p.alpha * (p.length - z) / (2.0 * p.optical_depth().sqrt())).exp() / PI.sqrt();
    Ok(-a * b.sqrt() / p.length.sqrt() * (1.0 - dip))
}

/// Large-depth internal field at the write moment,
/// `A(L)[-b(z)g(z)e^{-b(L-z)T₂/(1+√(αz))} - b(L-z)/2 + b(z)/2]`.
pub fn field_at_zero_closed(p: &MediumParams, z: f64) -> Result<f64> {
    p.check_depth("field_at_zero_closed", z)?;
    let a = p.norm_const()?;
    let bz = p.b_unchecked(z);
    let brest = p.b_unchecked(p.length - z);
    let gz = p.g_of(z)?;
    let decay = (-brest * p.t2 / (1.0 + (p.alpha * z).sqrt())).exp();
    Ok(a * (-bz * gz * decay - brest / 2.0 + bz / 2.0))
}

struct Decomposition {
    a_l: f64,
    a_z: f64,
    a_rest: f64,
    b_z: f64,
    b_rest: f64,
    inner: MediumParams,
    rest: MediumParams,
}

impl Decomposition {
    fn new(p: &MediumParams, z: f64) -> Result<Self> {
        let slack = 1e-12 * p.length;
        if !(z > slack && z < p.length - slack) {
            return Err(Error::Domain {
                function: "field_inside_decomposition",
                value: z,
                expected: "0 < z < L (use propagate at the end faces)",
            });
        }
        let inner = p.with_length(z)?;
        let rest = p.with_length(p.length - z)?;
        Ok(Decomposition {
            a_l: p.norm_const()?,
            a_z: inner.norm_const()?,
            a_rest: rest.norm_const()?,
            b_z: inner.b_unchecked(z),
            b_rest: rest.b_unchecked(p.length - z),
            inner,
            rest,
        })
    }

    /// `F_in^{L-z}(t)`.
    fn rest_input(&self, t: f64) -> f64 {
        -self.a_rest * phi(self.b_rest, self.rest.t2, -t)
    }

    /// `F_in^{z}(-t)`.
    fn inner_input_reversed(&self, t: f64) -> f64 {
        -self.a_z * phi(self.b_z, self.inner.t2, t)
    }

    /// Every term except the convolution.
    fn local_terms(&self, t: f64, gamma_z: f64) -> f64 {
        self.a_l / self.a_z * gamma_z + self.a_l / self.a_rest * self.rest_input(t)
            - self.a_l / self.a_z * self.inner_input_reversed(t)
    }
}

/// Internal field `F(t, z)` of the optimal pulse for the full medium, assembled
/// from the sub-media `[0, z]` and `[z, L]`:
///
/// ```text
/// F(t,z) = A(L)/(A(z)A(L-z))·∫γ(t-τ, z) F_in^{L-z}(τ) dτ + A(L)/A(z)·γ(t, z)
///          + A(L)/A(L-z)·F_in^{L-z}(t) - A(L)/A(z)·F_in^{z}(-t)
/// ```
pub fn field_inside_decomposition(
    p: &MediumParams,
    z: f64,
    grid: &TimeGrid,
    method: GammaMethod,
) -> Result<Signal> {
    let d = Decomposition::new(p, z)?;
    let dt = grid.dt();
    let n = grid.len();
    // γ(·, z) on the lattice j·dt so the convolution lands back on `grid`.
    let half_span = (n as f64 * dt / 2.0)
        .max(grid.t_end().abs())
        .max(grid.t_start().abs());
    let m = (half_span / dt).ceil() as usize;
    let aux = TimeGrid::new(-(m as f64) * dt, dt, 2 * m + 1)?;
    let (gamma_aux, converged) = gamma_with(&d.inner, &aux, method, DEFAULT_M_MAX)?;
    if !converged {
        log::warn!("field_inside_decomposition: γ series truncated");
    }
    let rest_in = Signal::from_real_fn(*grid, |t| d.rest_input(t));
    let conv = convolve(&rest_in, &gamma_aux)?;
    let offset = ((grid.t_start() - conv.grid().t_start()) / dt).round() as usize;
    let (gamma_here, _) = gamma_with(&d.inner, grid, method, DEFAULT_M_MAX)?;
    let scale = d.a_l / (d.a_z * d.a_rest);
    let samples = (0..n)
        .map(|k| {
            let t = grid.time(k);
            conv.samples()[offset + k] * scale + d.local_terms(t, gamma_here.samples()[k].re)
        })
        .collect();
    Signal::new(*grid, samples)
}

/// The decomposition evaluated at one time `t`, with the convolution done as a
/// midpoint sum over the cells of `grid`.
pub fn field_inside_at(
    p: &MediumParams,
    z: f64,
    t: f64,
    grid: &TimeGrid,
    method: GammaMethod,
) -> Result<f64> {
    let d = Decomposition::new(p, z)?;
    let n = grid.len();
    // γ(t - t_k) for k = n-1 … 0 is uniform in its argument.
    let args = TimeGrid::new(t - grid.t_end(), grid.dt(), n)?;
    let (gamma_args, _) = gamma_with(&d.inner, &args, method, DEFAULT_M_MAX)?;
    let conv: f64 = (0..n)
        .map(|k| gamma_args.samples()[n - 1 - k].re * d.rest_input(grid.time(k)))
        .sum::<f64>()
        * grid.dt();
    let gamma_t = match method {
        GammaMethod::Series => crate::optimal::gamma_series(&d.inner, t, DEFAULT_M_MAX)?.value,
        GammaMethod::Spectral => {
            // γ is continuous; interpolate on the lattice already computed.
            gamma_args.value_at(0.0).re
        }
    };
    let _ = args;
    Ok(conv * d.a_l / (d.a_z * d.a_rest) + d.local_terms(t, gamma_t))
}
