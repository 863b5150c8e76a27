use num_complex::Complex64;

use absorber_core::signal::inverse_transform;
use absorber_core::{MediumParams, Spectrum, TimeGrid};

fn unit(d: f64) -> MediumParams {
    MediumParams::dimensionless(d).unwrap()
}

/// Inverse transform of `H(ω, z) - 1` reproduces `-Φ(t, z)`. The leading
/// `-b/(1/T₂ - iω)` tail, whose image `-b·e^{-t/T₂}θ(t)` is known exactly, is
/// taken out before the FFT and added back afterwards.
#[test]
fn transfer_and_impulse_response_are_a_fourier_pair() {
    for d in [1.0, 10.0, 100.0] {
        let p = unit(d);
        let b = p.b_of(1.0).unwrap();
        let grid = TimeGrid::cell_centered(-40.0, 40.0, 1.0 / (32.0 * d.max(8.0))).unwrap();
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let spectrum = Spectrum::from_fn(&grid, |w| {
            let tail = b / Complex64::new(1.0, -w);
            (p.transfer_thick(1.0, w).unwrap() - 1.0 + tail) / norm
        });
        let smooth = inverse_transform(&spectrum).unwrap();
        let mut worst: f64 = 0.0;
        for (t, v) in smooth.iter() {
            if (0.0..=10.0).contains(&t) {
                let numeric = v.re - b * (-t).exp();
                let exact = -p.impulse_response_regular(1.0, t).unwrap();
                worst = worst.max((numeric - exact).abs());
            }
        }
        assert!(worst <= 1e-3 * b, "αz = {d}: max error {worst:e}");
    }
}

#[test]
fn thin_slices_compose_to_thick_medium() {
    let p = unit(10.0);
    let omegas: Vec<f64> = (-50..=50).map(|k| k as f64 * 0.2).collect();
    let err = |n: u32| {
        omegas
            .iter()
            .map(|&w| {
                let thin = p.transfer_thin(1.0 / n as f64, w).powu(n);
                (thin - p.transfer_thick(1.0, w).unwrap()).norm()
            })
            .fold(0.0, f64::max)
    };
    let e: Vec<f64> = [100, 1000, 10000].into_iter().map(err).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 10.0).abs() < 1.0, "errors {e:?}");
    }
}

#[test]
fn zero_frequency_area() {
    // √(2π)·Φ̂(0) = ∫Φ dt = 1 - e^{-αz/2}, by a fine midpoint rule.
    for (d, z) in [(10.0, 1.0), (10.0, 0.3), (100.0, 0.5)] {
        let p = unit(d);
        let h = 1e-4;
        let n = (60.0 / h) as usize;
        let area: f64 = (0..n)
            .map(|k| p.impulse_response_regular(z, (k as f64 + 0.5) * h).unwrap())
            .sum::<f64>()
            * h;
        let exact = 1.0 - (-d * z / 2.0).exp();
        assert!(
            (area / exact - 1.0).abs() < 1e-6,
            "{d} {z}: {area} vs {exact}"
        );
    }
}
