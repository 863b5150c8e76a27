mod common;

use absorber_core::specfun::*;

#[test]
fn oracle_is_sane() {
    common::oracle_self_check();
}

#[test]
fn j1_absolute_error() {
    for x in common::log_points(1e-4, 1e3, 100) {
        let err = (bessel_j1(x).unwrap() - common::j1(x)).abs();
        assert!(err <= 1e-12, "J1({x}): {err:e}");
    }
    assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
    assert!(bessel_j1(-1.0).is_err());
}

#[test]
fn i0_i1_relative_error() {
    for x in common::log_points(1e-4, 30.0, 100) {
        let e0 = bessel_i0(x).unwrap() / common::i0(x) - 1.0;
        let e1 = bessel_i1(x).unwrap() / common::i1(x) - 1.0;
        assert!(
            e0.abs() <= 1e-10 && e1.abs() <= 1e-10,
            "x = {x}: {e0:e} {e1:e}"
        );
    }
    for x in common::log_points(1e-2, 1e3, 100) {
        let e0 = bessel_i0_scaled(x).unwrap() / common::i0_scaled(x) - 1.0;
        let e1 = bessel_i1_scaled(x).unwrap() / common::i1_scaled(x) - 1.0;
        assert!(
            e0.abs() <= 1e-10 && e1.abs() <= 1e-10,
            "scaled x = {x}: {e0:e} {e1:e}"
        );
    }
}

#[test]
fn wronskian_combination_decreases() {
    // e^{-2x}(I0² - I1²) is decreasing; check the oracle and the implementation agree on it.
    let xs = common::log_points(1e-2, 10.0, 100);
    let f = |x: f64| {
        let (a, b) = (bessel_i0_scaled(x).unwrap(), bessel_i1_scaled(x).unwrap());
        a * a - b * b
    };
    for w in xs.windows(2) {
        assert!(f(w[1]) < f(w[0]));
        let o = common::i0_scaled(w[0]).powi(2) - common::i1_scaled(w[0]).powi(2);
        assert!((f(w[0]) / o - 1.0).abs() < 1e-10);
    }
}

#[test]
fn large_argument_scaled_sum() {
    let x = 100.0;
    let sum = bessel_i0_scaled(x).unwrap() + bessel_i1_scaled(x).unwrap();
    let asym = (2.0 / (std::f64::consts::PI * x)).sqrt() * (1.0 - 1.0 / (8.0 * x));
    assert!((sum / asym - 1.0).abs() < 1e-4);
}

#[test]
fn k_half_relative_error() {
    for x in common::log_points(1e-2, 600.0, 100) {
        for m in [1, 2, 3, 7, 20, 60] {
            let e = bessel_k_half(m, x).unwrap() / common::k_half_closed(m, x) - 1.0;
            assert!(e.abs() <= 1e-9, "K_{{{m}-1/2}}({x}): {e:e}");
        }
    }
}

#[test]
fn phi_shape_against_series() {
    for u in common::log_points(1e-8, 1e4, 100) {
        let x = 2.0 * u.sqrt();
        let err = (phi_shape(u).unwrap() - common::j1(x) / u.sqrt()).abs();
        assert!(err <= 1e-10, "phi({u}): {err:e}");
    }
}

#[test]
fn phi_shape_smooth_across_branch_switch() {
    let s = 1e-4;
    let h = 1e-7;
    let below = phi_shape(s * (1.0 - 1e-12)).unwrap();
    let above = phi_shape(s * (1.0 + 1e-12)).unwrap();
    assert!((below - above).abs() < 1e-10);
    let slope_lo = (phi_shape(s - h).unwrap() - phi_shape(s - 2.0 * h).unwrap()) / h;
    let slope_hi = (phi_shape(s + 2.0 * h).unwrap() - phi_shape(s + h).unwrap()) / h;
    // φ'(0) = -1/2.
    assert!((slope_lo - slope_hi).abs() < 1e-6, "{slope_lo} {slope_hi}");
    assert!((slope_lo + 0.5).abs() < 1e-3);
}
