//! Sampled complex signals on uniform time grids.
//!
//! A [`Signal`] stores a complex amplitude density (units of time^{-1/2}) so
//! that `∫|F|² dt` is a probability. Fourier transforms use the symmetric
//! convention
//!
//! ```text
//! F(ω) = (2π)^{-1/2} ∫ F(t) e^{+iωt} dt,     F(t) = (2π)^{-1/2} ∫ F(ω) e^{-iωt} dω
//! ```
//!
//! realised on the grid by a single FFT with explicit phase bookkeeping, so
//! that Parseval holds exactly for the discrete sums.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform time grid `t_k = t_start + k·dt`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
                reason: "time step must be positive and finite",
            });
        }
        if !t_start.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_start",
                value: t_start,
                reason: "grid origin must be finite",
            });
        }
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n as f64,
                reason: "a grid needs at least two samples",
            });
        }
        Ok(TimeGrid { t_start, dt, n })
    }

    /// Grid whose samples sit at the centres of the cells tiling `[t_min, t_max]`.
    ///
    /// Window edges (and `t = 0` when it is a multiple of `dt` from `t_min`)
    /// fall on cell boundaries, never on samples.
    pub fn cell_centered(t_min: f64, t_max: f64, dt: f64) -> Result<Self> {
        if !(t_max > t_min) {
            return Err(Error::InvalidParameter {
                name: "t_max",
                value: t_max,
                reason: "window end must exceed window start",
            });
        }
        let n = ((t_max - t_min) / dt).round() as usize;
        Self::new(t_min + 0.5 * dt, dt, n)
    }

    /// Default simulation grid for optical depth `optical_depth`: cells of
    /// `T₂/(32·max(αL, 8))` tiling `[-20T₂, 20T₂]`.
    pub fn default_for(optical_depth: f64, t2: f64) -> Result<Self> {
        let dt = t2 / (32.0 * optical_depth.max(8.0));
        Self::cell_centered(-20.0 * t2, 20.0 * t2, dt)
    }

    /// Recover a grid from explicit sample times, rejecting non-uniform spacing.
    ///
    /// `rel_tol` bounds the allowed deviation from `t_start + k·dt` in units of `dt`.
    pub fn from_times(times: &[f64], rel_tol: f64) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: times.len() as f64,
                reason: "a grid needs at least two samples",
            });
        }
        let n = times.len();
        let t_start = times[0];
        let dt = (times[n - 1] - t_start) / (n - 1) as f64;
        let grid = Self::new(t_start, dt, n)?;
        for (k, &t) in times.iter().enumerate() {
            let deviation = (t - grid.time(k)).abs();
            if !(deviation <= rel_tol * dt) {
                return Err(Error::NonUniformGrid {
                    index: k,
                    deviation,
                });
            }
        }
        Ok(grid)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.time(k))
    }

    /// True when the grid maps onto itself under `t → -t`.
    pub fn is_symmetric(&self) -> bool {
        (self.t_start + self.t_end()).abs() <= 1e-9 * self.dt
    }

    /// Same spacing, `extra` more samples appended after the end.
    pub fn extended(&self, extra: usize) -> Self {
        TimeGrid {
            n: self.n + extra,
            ..*self
        }
    }

    pub fn same_spacing(&self, other: &TimeGrid) -> bool {
        (self.dt - other.dt).abs() <= 1e-12 * self.dt.max(other.dt)
    }
}

/// Complex amplitude density sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: TimeGrid,
    samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Signal { grid, samples })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Signal {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: TimeGrid, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let samples = grid.times().map(&mut f).collect();
        Signal { grid, samples }
    }

    pub fn from_real_fn(grid: TimeGrid, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_fn(grid, |t| Complex64::new(f(t), 0.0))
    }

    /// Real samples; panics if the length does not match the grid.
    pub fn from_real_samples(grid: TimeGrid, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count must match the grid");
        Signal {
            grid,
            samples: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.grid.times().zip(self.samples.iter().copied())
    }

    /// `∫|F|² dt` over the whole grid.
    pub fn total_probability(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid.dt
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Signal {
        Signal {
            grid: self.grid,
            samples: self.samples.iter().map(|s| s * factor).collect(),
        }
    }

    /// Pointwise `self + factor·other` on a shared grid.
    pub fn add_scaled(&self, other: &Signal, factor: f64) -> Result<Signal> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Signal {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b * factor)
                .collect(),
        })
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, t: f64) -> Complex64 {
        let x = (t - self.grid.t_start) / self.grid.dt;
        if x < 0.0 || x > (self.grid.n - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let k = (x.floor() as usize).min(self.grid.n - 2);
        let frac = x - k as f64;
        self.samples[k] * (1.0 - frac) + self.samples[k + 1] * frac
    }

    /// Magnitude at the grid edges relative to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.peak_magnitude();
        if peak == 0.0 {
            return 0.0;
        }
        let edge = self.samples[0]
            .norm()
            .max(self.samples[self.len() - 1].norm());
        edge / peak
    }

    pub fn check_finite(&self) -> Result<()> {
        match self
            .samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            Some(k) => Err(Error::NonFinite(k)),
            None => Ok(()),
        }
    }
}

pub(crate) fn ensure_same_grid(a: &TimeGrid, b: &TimeGrid) -> Result<()> {
    let aligned = a.len() == b.len()
        && a.same_spacing(b)
        && (a.t_start() - b.t_start()).abs() <= 1e-9 * a.dt();
    if aligned {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "grids differ: (t_start {}, dt {}, n {}) vs (t_start {}, dt {}, n {})",
            a.t_start(),
            a.dt(),
            a.len(),
            b.t_start(),
            b.dt(),
            b.len()
        )))
    }
}

/// Fourier image of a [`Signal`] on the conjugate angular-frequency grid.
///
/// `ω_k = (k - ⌊n/2⌋)·dω` with `dω = 2π/(n·dt)`; the time origin of the source
/// grid is kept so that the inverse lands on the same samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    d_omega: f64,
    time_origin: f64,
    samples: Vec<Complex64>,
}

impl Spectrum {
    /// Spectrum with samples given directly on the grid conjugate to `grid`.
    pub fn new(grid: &TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} spectral samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Spectrum {
            d_omega: 2.0 * PI / (grid.len() as f64 * grid.dt()),
            time_origin: grid.t_start(),
            samples,
        })
    }

    /// Spectrum built by evaluating `f(ω)` on the grid conjugate to `grid`.
    pub fn from_fn(grid: &TimeGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let n = grid.len();
        let d_omega = 2.0 * PI / (n as f64 * grid.dt());
        let half = (n / 2) as f64;
        Spectrum {
            d_omega,
            time_origin: grid.t_start(),
            samples: (0..n).map(|k| f((k as f64 - half) * d_omega)).collect(),
        }
    }

    pub fn d_omega(&self) -> f64 {
        self.d_omega
    }

    pub fn omega(&self, k: usize) -> f64 {
        (k as f64 - (self.samples.len() / 2) as f64) * self.d_omega
    }

    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |k| self.omega(k))
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time grid the inverse transform lands on.
    pub fn time_grid(&self) -> TimeGrid {
        let n = self.samples.len();
        TimeGrid {
            t_start: self.time_origin,
            dt: 2.0 * PI / (n as f64 * self.d_omega),
            n,
        }
    }

    /// `∫|F(ω)|² dω`.
    pub fn total_probability(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.d_omega
    }

    /// Multiply every sample by `h(ω)`.
    pub fn apply(&mut self, h: impl Fn(f64) -> Complex64) {
        let n = self.samples.len();
        let half = (n / 2) as f64;
        for (k, s) in self.samples.iter_mut().enumerate() {
            *s *= h((k as f64 - half) * self.d_omega);
        }
    }
}

pub(crate) fn fft_in_place(buf: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    planner.plan_fft(buf.len(), direction).process(buf);
}

/// Phase `e^{i·sign·2π·(a·b mod n)/n}` with the product reduced before scaling.
#[inline]
pub(crate) fn lattice_phase(a: f64, b: f64, n: usize, sign: f64) -> Complex64 {
    let r = (a * b).rem_euclid(n as f64);
    Complex64::from_polar(1.0, sign * 2.0 * PI * r / n as f64)
}

/// Forward transform under the `e^{+iωt}` convention.
pub fn forward_transform(s: &Signal) -> Result<Spectrum> {
    s.check_finite()?;
    let edge = s.edge_ratio();
    if edge > 1e-6 {
        log::warn!(
            "forward_transform: edge magnitude is {edge:.2e} of peak; the periodic extension is not negligible"
        );
    }
    let grid = s.grid;
    let n = grid.len();
    let half = (n / 2) as f64;
    let origin_steps = grid.t_start() / grid.dt();
    let mut buf: Vec<Complex64> = s
        .samples
        .iter()
        .enumerate()
        .map(|(j, x)| x * lattice_phase(half, j as f64, n, -1.0))
        .collect();
    fft_in_place(&mut buf, FftDirection::Inverse);
    let scale = grid.dt() / (2.0 * PI).sqrt();
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= lattice_phase(k as f64 - half, origin_steps, n, 1.0) * scale;
    }
    Ok(Spectrum {
        d_omega: 2.0 * PI / (n as f64 * grid.dt()),
        time_origin: grid.t_start(),
        samples: buf,
    })
}

/// Inverse transform under the `e^{-iωt}` convention.
pub fn inverse_transform(sp: &Spectrum) -> Result<Signal> {
    if let Some(k) = sp
        .samples
        .iter()
        .position(|s| !(s.re.is_finite() && s.im.is_finite()))
    {
        return Err(Error::NonFinite(k));
    }
    let grid = sp.time_grid();
    let n = grid.len();
    let half = (n / 2) as f64;
    let origin_steps = grid.t_start() / grid.dt();
    let mut buf: Vec<Complex64> = sp
        .samples
        .iter()
        .enumerate()
        .map(|(k, x)| x * lattice_phase(k as f64 - half, origin_steps, n, -1.0))
        .collect();
    fft_in_place(&mut buf, FftDirection::Forward);
    let scale = sp.d_omega / (2.0 * PI).sqrt();
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= lattice_phase(half, j as f64, n, 1.0) * scale;
    }
    Ok(Signal { grid, samples: buf })
}

/// Linear convolution `∫ s(τ) k(t-τ) dτ` by zero-padded FFT.
///
/// The output grid starts at `s.t_start + kernel.t_start` and has
/// `len(s) + len(kernel) - 1` samples.
pub fn convolve(s: &Signal, kernel: &Signal) -> Result<Signal> {
    if !s.grid.same_spacing(&kernel.grid) {
        return Err(Error::GridMismatch(format!(
            "convolution needs equal time steps ({} vs {})",
            s.grid.dt(),
            kernel.grid.dt()
        )));
    }
    let n_out = s.len() + kernel.len() - 1;
    let size = (s.len() + kernel.len()).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); size];
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    a[..s.len()].copy_from_slice(&s.samples);
    b[..kernel.len()].copy_from_slice(&kernel.samples);
    fft_in_place(&mut a, FftDirection::Forward);
    fft_in_place(&mut b, FftDirection::Forward);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_in_place(&mut a, FftDirection::Inverse);
    let scale = s.grid.dt() / size as f64;
    a.truncate(n_out);
    a.iter_mut().for_each(|v| *v *= scale);
    let grid = TimeGrid::new(s.grid.t_start() + kernel.grid.t_start(), s.grid.dt(), n_out)?;
    Ok(Signal { grid, samples: a })
}

/// Probability carried by a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowProbability {
    pub value: f64,
    /// Window edges after snapping to the half-step lattice of the grid.
    pub lo: f64,
    pub hi: f64,
    /// Largest distance an in-range edge moved while snapping.
    pub snap_distance: f64,
    /// The window missed the grid entirely.
    pub empty: bool,
}

/// Per-sample weights (0, ½ or 1) of the window `[t_lo, t_hi]`.
///
/// Edges snap to the nearest sample or cell boundary (`t_k ± dt/2`). A sample
/// lying exactly on an edge contributes half its cell, which is the θ(0) = ½
/// convention for splits at `t = 0`.
pub(crate) struct WindowWeights {
    /// Window in half-step lattice units, relative to `t_start - dt/2`.
    lo2: i64,
    hi2: i64,
    pub lo: f64,
    pub hi: f64,
    pub snap_distance: f64,
}

impl WindowWeights {
    pub fn new(grid: &TimeGrid, t_lo: f64, t_hi: f64) -> Self {
        let half = 0.5 * grid.dt();
        let base = grid.t_start() - half;
        let top = 2 * grid.len() as i64;
        let mut snap_distance: f64 = 0.0;
        let mut snap = |t: f64| -> i64 {
            let x = (t - base) / half;
            if x.is_nan() {
                return 0;
            }
            if x <= 0.0 {
                return 0;
            }
            if x >= top as f64 {
                return top;
            }
            let j = x.round() as i64;
            snap_distance = snap_distance.max((x - j as f64).abs() * half);
            j
        };
        let lo2 = snap(t_lo);
        let hi2 = snap(t_hi);
        WindowWeights {
            lo2,
            hi2,
            lo: base + lo2 as f64 * half,
            hi: base + hi2 as f64 * half,
            snap_distance,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.hi2 <= self.lo2
    }

    /// Weight of sample `k` (its cell spans half-steps `2k..2k+2`).
    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        let a = (2 * k as i64).max(self.lo2);
        let b = (2 * k as i64 + 2).min(self.hi2);
        ((b - a).max(0) as f64) * 0.5
    }

    /// Index range of samples with non-zero weight.
    pub fn range(&self) -> std::ops::Range<usize> {
        if self.is_empty() {
            return 0..0;
        }
        let first = (self.lo2 / 2) as usize;
        let last = ((self.hi2 + 1) / 2) as usize;
        first..last
    }
}

/// `∫_{t_lo}^{t_hi} |F|² dt` with half weights at edge samples.
pub fn probability(s: &Signal, t_lo: f64, t_hi: f64) -> WindowProbability {
    let w = WindowWeights::new(&s.grid, t_lo, t_hi);
    if w.is_empty() {
        log::warn!("probability: window [{t_lo}, {t_hi}] does not intersect the grid");
        return WindowProbability {
            value: 0.0,
            lo: w.lo,
            hi: w.hi,
            snap_distance: w.snap_distance,
            empty: true,
        };
    }
    let value = w
        .range()
        .map(|k| w.weight(k) * s.samples[k].norm_sqr())
        .sum::<f64>()
        * s.grid.dt();
    WindowProbability {
        value,
        lo: w.lo,
        hi: w.hi,
        snap_distance: w.snap_distance,
        empty: false,
    }
}

/// `F(t) → F(-t)`: samples reversed, grid mirrored.
pub fn time_reverse(s: &Signal) -> Signal {
    let grid = TimeGrid {
        t_start: -s.grid.t_end(),
        ..s.grid
    };
    let samples = s.samples.iter().rev().copied().collect();
    Signal { grid, samples }
}
