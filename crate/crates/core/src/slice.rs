//! Time-domain response of optically thin slices and their cascade.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::MediumParams;
use crate::signal::{ensure_same_grid, Signal, TimeGrid};

/// Coupling `N_p·μ` of a slice and the population lifetime `T₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceParams {
    pub np_mu: f64,
    pub t1: f64,
}

impl SliceParams {
    pub fn new(np_mu: f64, t1: f64) -> Result<Self> {
        if !(np_mu >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "np_mu",
                value: np_mu,
                reason: "slice coupling must be non-negative",
            });
        }
        if !(t1 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "T1",
                value: t1,
                reason: "population lifetime must be positive",
            });
        }
        Ok(SliceParams { np_mu, t1 })
    }

    /// Slice of thickness `dz` cut from `p`: `N_pμ = α·dz/4`, `T₁ = T₂/2`.
    pub fn from_medium(p: &MediumParams, dz: f64) -> Result<Self> {
        Self::new(p.alpha * dz / 4.0, p.t1())
    }

    /// Decay rate `(N_pμ + 1)/(2T₁)` of the slice polarisation.
    pub fn decay_rate(&self) -> f64 {
        (self.np_mu + 1.0) / (2.0 * self.t1)
    }

    pub fn coupling(&self) -> f64 {
        (self.np_mu / self.t1).sqrt()
    }
}

/// Excitation amplitude `c(t)` of a slice on the grid of its driving field.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceState {
    pub grid: TimeGrid,
    pub c: Vec<Complex64>,
}

/// Trapezoid values of `∫_{t_0}^{t_k} f(s) e^{-r(t_k - s)} ds` for every `k`.
///
/// The running sum `S_k = e^{-r·dt}S_{k-1} + f_k` makes the whole trace O(n).
pub(crate) fn causal_exp_integral(f: &[Complex64], dt: f64, rate: f64) -> Vec<Complex64> {
    let q = (-rate * dt).exp();
    let mut out = Vec::with_capacity(f.len());
    let mut s = Complex64::new(0.0, 0.0);
    let mut first = Complex64::new(0.0, 0.0);
    for (k, &fk) in f.iter().enumerate() {
        s = s * q + fk;
        if k == 0 {
            first = fk;
        } else {
            first *= q;
        }
        out.push(if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            (s - 0.5 * fk - 0.5 * first) * dt
        });
    }
    out
}

/// `c(t) = c₀e^{-κ(t - t_0)} - √(N_pμ/T₁)∫₀^∞ F(t-τ) e^{-κτ} dτ`, `κ = (N_pμ+1)/(2T₁)`.
///
/// `c_init` is the amplitude at the first grid sample; the input is taken to
/// vanish before it.
pub fn slice_excitation(input: &Signal, sp: &SliceParams, c_init: Complex64) -> SliceState {
    let grid = *input.grid();
    let kappa = sp.decay_rate();
    let drive = causal_exp_integral(input.samples(), grid.dt(), kappa);
    let coupling = sp.coupling();
    let c = drive
        .iter()
        .enumerate()
        .map(|(k, d)| c_init * (-kappa * k as f64 * grid.dt()).exp() - coupling * d)
        .collect();
    SliceState { grid, c }
}

/// `F(t) = F_in(t) + √(N_pμ/T₁)·c(t)`.
pub fn slice_output(input: &Signal, state: &SliceState, sp: &SliceParams) -> Result<Signal> {
    ensure_same_grid(input.grid(), &state.grid)?;
    let coupling = sp.coupling();
    let samples = input
        .samples()
        .iter()
        .zip(&state.c)
        .map(|(f, c)| f + coupling * c)
        .collect();
    Signal::new(*input.grid(), samples)
}

fn scatter_in_place(buf: &mut [Complex64], dt: f64, b: f64, rate: f64) {
    let scattered = causal_exp_integral(buf, dt, rate);
    for (f, s) in buf.iter_mut().zip(&scattered) {
        *f -= b * s;
    }
}

/// Forward scattering by a thin slice: `F = F_in - b(dz)∫₀^∞ F_in(t-τ) e^{-τ/T₂} dτ`.
pub fn thin_scatter(input: &Signal, p: &MediumParams, dz: f64) -> Signal {
    if p.alpha * dz >= 0.1 {
        log::warn!(
            "thin_scatter: slice optical depth {} is not small",
            p.alpha * dz
        );
    }
    let mut out = input.clone();
    let dt = input.grid().dt();
    scatter_in_place(out.samples_mut(), dt, p.b_unchecked(dz), 1.0 / p.t2);
    out
}

/// `n` successive thin slices of thickness `L/n`.
pub fn cascade(input: &Signal, p: &MediumParams, n: usize) -> Result<Signal> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "cascade needs at least one slice",
        });
    }
    let dz = p.length / n as f64;
    if p.alpha * dz >= 0.1 {
        log::warn!("cascade: slice optical depth {} is not small", p.alpha * dz);
    }
    let b = p.b_unchecked(dz);
    let dt = input.grid().dt();
    let mut out = input.clone();
    for _ in 0..n {
        scatter_in_place(out.samples_mut(), dt, b, 1.0 / p.t2);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::forward_transform;
    use approx::assert_relative_eq;

    fn grid() -> TimeGrid {
        TimeGrid::cell_centered(-10.0, 20.0, 1.0 / 128.0).unwrap()
    }

    #[test]
    fn recursion_matches_direct_trapezoid() {
        let g = TimeGrid::new(0.0, 0.05, 60).unwrap();
        let f: Vec<Complex64> = g
            .times()
            .map(|t| Complex64::new(t.sin() + 0.3, 0.2 * t))
            .collect();
        let rate = 0.8;
        let fast = causal_exp_integral(&f, g.dt(), rate);
        for k in [0usize, 1, 7, 59] {
            let mut direct = Complex64::new(0.0, 0.0);
            for (j, fj) in f.iter().enumerate().take(k + 1) {
                let w = if j == 0 || j == k { 0.5 } else { 1.0 };
                direct += fj * w * (-rate * (k - j) as f64 * g.dt()).exp();
            }
            direct *= g.dt();
            if k == 0 {
                direct = Complex64::new(0.0, 0.0);
            }
            assert!((fast[k] - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn free_decay() {
        let sp = SliceParams::new(0.01, 0.5).unwrap();
        let zero = Signal::zeros(grid());
        let s = slice_excitation(&zero, &sp, Complex64::new(0.0, 0.0));
        assert!(s.c.iter().all(|c| c.norm() == 0.0));
        let s = slice_excitation(&zero, &sp, Complex64::new(1.0, 0.0));
        let kappa = sp.decay_rate();
        for (k, c) in s.c.iter().enumerate().step_by(101) {
            let t = k as f64 * grid().dt();
            assert_relative_eq!(c.re, (-kappa * t).exp(), max_relative = 1e-12);
        }
        assert!(s.c.windows(2).all(|w| w[1].norm() <= w[0].norm()));
    }

    #[test]
    fn constant_drive_steady_state() {
        let sp = SliceParams::new(1e-6, 0.5).unwrap();
        let g = TimeGrid::new(0.0, 1e-3, 5001).unwrap();
        let f0 = 0.7;
        let input = Signal::from_real_fn(g, |_| f0);
        let s = slice_excitation(&input, &sp, Complex64::new(0.0, 0.0));
        let ss = -sp.coupling() * f0 * 2.0 * sp.t1;
        // The transient e^{-t/2T₁} is below 1% from t = 2·ln(100)·T₁ ≈ 9.2T₁.
        let after = (9.3 * sp.t1 / g.dt()) as usize;
        for c in &s.c[after..] {
            assert!((c.re - ss).abs() < 0.01 * ss.abs());
        }
    }

    #[test]
    fn decoupled_slice_is_transparent() {
        let input = Signal::from_real_fn(grid(), |t| (-t * t).exp());
        let sp = SliceParams::new(0.0, 0.5).unwrap();
        let s = slice_excitation(&input, &sp, Complex64::new(0.0, 0.0));
        assert_eq!(slice_output(&input, &s, &sp).unwrap(), input);
        let p = MediumParams::dimensionless(10.0).unwrap();
        assert_eq!(thin_scatter(&input, &p, 0.0), input);
    }

    #[test]
    fn slice_equations_match_thin_scatter() {
        let p = MediumParams::dimensionless(1.0).unwrap();
        let dz = 0.01;
        let sp = SliceParams::from_medium(&p, dz).unwrap();
        let input = Signal::from_real_fn(grid(), |t| (-(t - 1.0).powi(2)).exp());
        let s = slice_excitation(&input, &sp, Complex64::new(0.0, 0.0));
        let a = slice_output(&input, &s, &sp).unwrap();
        let b = thin_scatter(&input, &p, dz);
        let peak = input.peak_magnitude();
        let err = a
            .samples()
            .iter()
            .zip(b.samples())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-4 * peak, "err {err}");
    }

    #[test]
    fn thin_scatter_matches_thin_transfer() {
        let p = MediumParams::dimensionless(1.0).unwrap();
        let dz = 0.05;
        let g = TimeGrid::cell_centered(-20.0, 40.0, 1.0 / 256.0).unwrap();
        let input = Signal::from_real_fn(g, |t| (-(t + 2.0).powi(2)).exp());
        let out = forward_transform(&thin_scatter(&input, &p, dz)).unwrap();
        let inp = forward_transform(&input).unwrap();
        let h = out.len() / 2;
        for k in (h - 400..h + 400).step_by(13) {
            let w = inp.omegas().nth(k).unwrap();
            let expect = p.transfer_thin(dz, w) * inp.samples()[k];
            assert!((out.samples()[k] - expect).norm() <= 1e-6 * expect.norm().max(1e-3));
        }
    }

    // F_in = √2·θ(-t)e^{t}: scattered term at t = 0 is b·√2·∫₀^∞ e^{-2τ}dτ = b/√2.
    #[test]
    fn scattered_term_at_origin() {
        let p = MediumParams::dimensionless(1.0).unwrap();
        let dz = 0.02;
        let g = TimeGrid::new(-30.0, 1.0 / 512.0, 30 * 512 + 1).unwrap();
        let input = Signal::from_real_fn(g, |t| {
            if t < 0.0 {
                2f64.sqrt() * t.exp()
            } else if t == 0.0 {
                2f64.sqrt() / 2.0
            } else {
                0.0
            }
        });
        let out = thin_scatter(&input, &p, dz);
        let k0 = g.len() - 1;
        let scattered = input.samples()[k0] - out.samples()[k0];
        // Direct trapezoid oracle of the same integral.
        let b = p.b_of(dz).unwrap();
        let mut direct = 0.0;
        for j in 0..g.len() {
            let w = if j == 0 || j == k0 { 0.5 } else { 1.0 };
            direct += w * input.samples()[j].re * (g.time(j)).exp();
        }
        direct *= b * g.dt();
        assert!((scattered.re - direct).abs() < 1e-8);
        // The jump at t = 0 costs the trapezoid rule O(dt).
        assert!((scattered.re - b / 2f64.sqrt()).abs() < 1e-3 * b);
    }

    #[test]
    fn cascade_single_slice_and_passivity() {
        let p = MediumParams::dimensionless(0.05).unwrap();
        let input = Signal::from_real_fn(grid(), |t| (-(t * t)).exp());
        assert_eq!(
            cascade(&input, &p, 1).unwrap(),
            thin_scatter(&input, &p, 1.0)
        );
        let thick = MediumParams::dimensionless(10.0).unwrap();
        let out = cascade(&input, &thick, 200).unwrap();
        assert!(out.total_probability() <= input.total_probability());
        assert!(cascade(&input, &thick, 0).is_err());
    }
}
