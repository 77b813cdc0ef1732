use mslab::quadrature::{integrate_radial, integrate_rn_mc, QuadratureConfig};
use proptest::prelude::*;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn error_estimates_bound_true_errors_for_power_laws() {
    for k in 1..=9 {
        let a = k as f64 / 10.0;
        let r = integrate_radial(|r| r.powf(-1.0 + a), 0.0, 1.0, true, None, &cfg()).unwrap();
        assert!(r.converged);
        let err = (r.value - 1.0 / a).abs();
        assert!(
            err <= r.error_estimate.max(4.0 * f64::EPSILON / a),
            "a = {a}: {err:e} > {:e}",
            r.error_estimate
        );
    }
}

#[test]
fn error_estimates_bound_true_errors_with_loose_tolerances() {
    let loose = QuadratureConfig {
        rel_tol: 1e-4,
        ..cfg()
    };
    for k in 1..=9 {
        let a = k as f64 / 10.0;
        let r = integrate_radial(|r| r.powf(-1.0 + a), 0.0, 1.0, true, None, &loose).unwrap();
        let err = (r.value - 1.0 / a).abs();
        assert!(
            err <= r.error_estimate,
            "a = {a}: {err:e} > {:e}",
            r.error_estimate
        );
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let f = |r: f64| (1.0 / r).ln() * r.powf(-0.7) / (1.0 + r * r);
    let a = integrate_radial(f, 0.0, f64::INFINITY, true, Some(1.7), &cfg()).unwrap();
    let b = integrate_radial(f, 0.0, f64::INFINITY, true, Some(1.7), &cfg()).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.error_estimate.to_bits(), b.error_estimate.to_bits());
    assert_eq!(a.evaluations, b.evaluations);
    let g = |x: &[f64]| Ok((-x.iter().map(|v| v * v).sum::<f64>()).exp());
    let small = QuadratureConfig {
        mc_samples: 20_000,
        ..cfg()
    };
    let m1 = integrate_rn_mc(g, &[0.0; 4], 1.0, &small).unwrap();
    let m2 = integrate_rn_mc(g, &[0.0; 4], 1.0, &small).unwrap();
    assert_eq!(m1.value.to_bits(), m2.value.to_bits());
}

proptest! {
    #[test]
    fn converged_results_meet_their_tolerance(a in 0.05f64..0.95, c in 0.1f64..10.0, rel in 1e-12f64..1e-4) {
        let q = QuadratureConfig { rel_tol: rel, ..cfg() };
        let r = integrate_radial(|r| c * r.powf(-1.0 + a), 0.0, 1.0, true, None, &q).unwrap();
        prop_assert!(r.error_estimate >= 0.0);
        if r.converged {
            prop_assert!(r.error_estimate <= (q.rel_tol * r.value.abs()).max(q.abs_tol));
        }
    }

    #[test]
    fn tails_match_antiderivative(kappa in 0.05f64..3.0, lower in 0.5f64..5.0) {
        let r = integrate_radial(|r| r.powf(-1.0 - kappa), lower, f64::INFINITY, false, Some(kappa), &cfg()).unwrap();
        let exact = lower.powf(-kappa) / kappa;
        prop_assert!(((r.value - exact) / exact).abs() < 1e-9, "{} vs {}", r.value, exact);
    }
}
