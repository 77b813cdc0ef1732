use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::kernel::{
    make_capped_fractional, make_concentrating, make_custom_radial, make_fractional,
    make_log_corrected, make_shifted_gaussian, make_shifted_mollifier, make_zero, Drift,
    PowerPiece,
};
use crate::quadrature::gauss_legendre;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn schedule() -> EpsilonSchedule {
    EpsilonSchedule::default()
}

#[test]
fn tail_mass_examples() {
    let k = make_fractional(1, 2.0).unwrap();
    assert_relative_eq!(
        tail_mass(&k, 0.1, 2.0, &cfg()).unwrap(),
        0.870550563296124,
        max_relative = 1e-14
    );
    let b = make_shifted_mollifier(1, Drift::inverse()).unwrap();
    assert_relative_eq!(
        tail_mass(&b, 0.01, 10.0, &cfg()).unwrap(),
        1.0,
        max_relative = 1e-12
    );
}

#[test]
fn short_range_examples() {
    let k = make_fractional(1, 2.0).unwrap();
    assert_relative_eq!(
        short_range_moment(&k, 0.1, 1.0, 2.0, &cfg()).unwrap(),
        1.0 / 9.0,
        max_relative = 1e-14
    );
    assert_relative_eq!(
        short_range_moment(&k, 0.1, 1.0, 1.0, &cfg()).unwrap(),
        0.25,
        max_relative = 1e-14
    );
    let l = make_log_corrected(1, 2.0).unwrap();
    assert_relative_eq!(
        short_range_moment(&l, 0.1, 1.0, 2.0, &cfg()).unwrap(),
        0.01 / 0.81,
        max_relative = 1e-13
    );
}

#[test]
fn admissibility_examples() {
    let k = make_fractional(1, 2.0).unwrap();
    assert_relative_eq!(
        admissibility_integral(&k, 0.1, 0.5, 2.0, &cfg()).unwrap(),
        1.25,
        max_relative = 1e-14
    );
    assert_relative_eq!(
        admissibility_integral(&k, 0.25, 0.5, 2.0, &cfg()).unwrap(),
        2.0,
        max_relative = 1e-14
    );
    let b = make_shifted_mollifier(2, Drift::constant(3.0)).unwrap();
    assert_relative_eq!(
        admissibility_integral(&b, 0.2, 0.5, 2.0, &cfg()).unwrap(),
        1.0,
        max_relative = 1e-10
    );
}

#[test]
fn divergent_order_is_reported() {
    let k = make_fractional(1, 2.0).unwrap();
    let err = short_range_moment(&k, 0.5, 1.0, 1.0, &cfg()).unwrap_err();
    assert!(matches!(err.root(), Error::Divergent(_)), "{err}");
    let err = short_range_moment_quadrature(&k, 0.5, 1.0, 1.0, &cfg()).unwrap_err();
    assert!(matches!(err.root(), Error::Divergent(_)), "{err}");
    assert!(err.to_string().contains("fractional"));
}

fn centred_families(n: usize) -> Vec<KernelFamily> {
    let custom = make_custom_radial(
        n,
        vec![
            PowerPiece {
                from: 0.0,
                coeff: 0.3,
                eps_power: 1.0,
                exponent: -(n as f64),
                eps_exponent: -1.0,
            },
            PowerPiece {
                from: 1.5,
                coeff: 0.2,
                eps_power: 0.0,
                exponent: -(n as f64) - 2.0,
                eps_exponent: 0.0,
            },
        ],
        (0.0, 1.0),
    )
    .unwrap();
    vec![
        make_fractional(n, 2.0).unwrap(),
        make_fractional(n, 1.0).unwrap(),
        make_log_corrected(n, 2.0).unwrap(),
        make_capped_fractional(n, 1.5).unwrap(),
        custom,
    ]
}

#[test]
fn closed_forms_agree_with_quadrature() {
    for n in 1..=3 {
        for k in centred_families(n) {
            for &eps in &[0.1, 0.01] {
                for &r in &[0.5, 1.0, 2.0, 3.0] {
                    let closed = k.closed_form_tail_mass(eps, r).unwrap().unwrap();
                    let quad = tail_mass_quadrature(&k, eps, r, &cfg()).unwrap().value;
                    assert_relative_eq!(closed, quad, max_relative = 1e-8);
                    let closed = k.closed_form_moment(eps, r, 2.0).unwrap().unwrap();
                    let quad = short_range_moment_quadrature(&k, eps, r, 2.0, &cfg())
                        .unwrap()
                        .value;
                    assert_relative_eq!(closed, quad, max_relative = 1e-8);
                }
            }
        }
    }
}

/// Independent oracle for drifting kernels: polar coordinates about the
/// origin (not the kernel centre), composite Gauss–Legendre in r, and
/// composite Gauss–Legendre in the polar angle.
fn origin_polar(k: &KernelFamily, eps: f64, lo: f64, hi: f64, q: f64) -> f64 {
    let n = k.dimension;
    let (x, w) = gauss_legendre(20);
    let panels = 60;
    let composite = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| {
        let h = (b - a) / panels as f64;
        let mut sum = 0.0;
        for j in 0..panels {
            let m = a + (j as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                sum += wi * 0.5 * h * f(m + 0.5 * h * xi);
            }
        }
        sum
    };
    let c = k.shift_distance(eps);
    let support = k.profile_support(eps).unwrap();
    let a = lo.max(c - support).max(0.0);
    let b = hi.min(c + support);
    if b <= a {
        return 0.0;
    }
    composite(a, b, &|r| {
        let ang = match n {
            2 => 2.0 * composite(0.0, PI, &|t| k.eval(eps, &[r * t.cos(), r * t.sin()])),
            3 => {
                2.0 * PI
                    * composite(0.0, PI, &|t| {
                        t.sin() * k.eval(eps, &[r * t.cos(), r * t.sin(), 0.0])
                    })
            }
            _ => unreachable!(),
        };
        r.powi(n as i32 - 1) * r.powf(q) * ang
    })
}

#[test]
fn drifting_kernels_match_origin_polar_oracle() {
    let fast = QuadratureConfig {
        rel_tol: 1e-9,
        ..cfg()
    };
    for n in 2..=3 {
        let cases = [
            (
                make_shifted_mollifier(n, Drift::constant(0.5)).unwrap(),
                0.3,
            ),
            (make_shifted_gaussian(n).unwrap(), 0.5),
        ];
        for (k, eps) in &cases {
            for &r in &[0.4, 1.0, 1.3] {
                let m = tail_mass_quadrature(k, *eps, r, &fast).unwrap().value;
                assert_relative_eq!(
                    m,
                    origin_polar(k, *eps, r, f64::INFINITY, 0.0),
                    max_relative = 1e-7
                );
                let s = short_range_moment_quadrature(k, *eps, r, 2.0, &fast)
                    .unwrap()
                    .value;
                assert_relative_eq!(s, origin_polar(k, *eps, 0.0, r, 2.0), max_relative = 1e-7);
            }
        }
    }
}

#[test]
fn split_identity_for_normalized_families() {
    for n in 1..=3 {
        let kernels = [
            make_shifted_mollifier(n, Drift::constant(0.5)).unwrap(),
            make_shifted_mollifier(n, Drift::inverse()).unwrap(),
            make_shifted_gaussian(n).unwrap(),
        ];
        for k in &kernels {
            assert!(k.is_normalized());
            for &eps in &[0.9, 0.5] {
                for &r in &[0.3, 1.0, 1.4, 2.5] {
                    let out = tail_mass_quadrature(k, eps, r, &cfg()).unwrap().value;
                    let inside = short_range_moment_quadrature(k, eps, r, 0.0, &cfg())
                        .unwrap()
                        .value;
                    assert!(
                        (out + inside - 1.0).abs() < 1e-9,
                        "{} N = {n} ε = {eps} R = {r}: {}",
                        k.name,
                        out + inside
                    );
                }
            }
        }
    }
}

#[test]
fn report_rows_are_canonical_and_serialize() {
    let k = make_fractional(1, 2.0).unwrap();
    let sched = EpsilonSchedule::geometric(0.1, 0.5, 12).unwrap();
    let rep = moment_report(&k, &sched, &[4.0, 0.5, 1.0, 2.0], 2.0, &cfg()).unwrap();
    assert_eq!(rep.rows.len(), 48);
    assert_eq!((rep.rows[0].epsilon, rep.rows[0].radius), (0.1, 0.5));
    assert_eq!(rep.rows[2].radius, 2.0);
    assert_relative_eq!(
        rep.rows[2].tail_mass,
        0.870550563296124,
        max_relative = 1e-14
    );
    let csv = rep.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let expected = format!(
        "{:.16e},{:.16e},{:.16e},{:.16e}",
        0.1,
        0.5,
        0.5f64.powf(-0.2),
        0.2 * 0.5f64.powf(1.8) / 1.8
    );
    assert_eq!(lines.next(), Some(expected.as_str()));
    assert_eq!(csv.lines().count(), 49);
}

#[test]
fn fractional_verdicts_hold() {
    let k = make_fractional(1, 2.0).unwrap();
    let u = check_uniform(&k, &schedule(), &DEFAULT_RADII, 2.0, DEFAULT_TOL, &cfg()).unwrap();
    assert!(u.holds, "{u:?}");
    let it = check_iterated(&k, &schedule(), &DEFAULT_RADII, 2.0, DEFAULT_TOL, &cfg()).unwrap();
    assert!(it.holds, "{it:?}");
    let a = check_admissible(&k, &schedule(), 0.5, 2.0, DEFAULT_TOL, &cfg()).unwrap();
    assert!(a.holds, "{a:?}");
    assert!((a.evidence[0].limit - 1.0).abs() < 1e-6);
}

#[test]
fn iterated_holds_for_log_and_capped_families() {
    for k in [
        make_log_corrected(1, 2.0).unwrap(),
        make_capped_fractional(1, 2.0).unwrap(),
    ] {
        let it = check_iterated(&k, &schedule(), &DEFAULT_RADII, 2.0, DEFAULT_TOL, &cfg()).unwrap();
        assert!(it.holds, "{}: {it:?}", k.name);
    }
}

#[test]
fn shifted_gaussian_is_uniform() {
    let k = make_shifted_gaussian(1).unwrap();
    let u = check_uniform(&k, &schedule(), &DEFAULT_RADII, 2.0, DEFAULT_TOL, &cfg()).unwrap();
    assert!(u.holds, "{u:?}");
}

#[test]
fn concentrating_mollifier_is_admissible_but_not_uniform() {
    let k = make_concentrating(1, 0.5, 2.0).unwrap();
    let u = check_uniform(&k, &schedule(), &DEFAULT_RADII, 1.0, DEFAULT_TOL, &cfg()).unwrap();
    assert!(!u.holds);
    assert_eq!(u.mass_escape, Some(false));
    assert_eq!(u.attenuation, Some(false));
    let mass = u
        .evidence
        .iter()
        .find(|e| e.quantity == Quantity::MassEscape)
        .unwrap();
    assert_eq!(mass.limit, 0.0);
    let a = check_admissible(&k, &schedule(), 0.5, 2.0, DEFAULT_TOL, &cfg()).unwrap();
    assert!(a.holds, "{a:?}");
}

#[test]
fn mass_escape_and_attenuation_agree_on_admissible_families() {
    for k in [
        make_fractional(1, 2.0).unwrap(),
        make_concentrating(1, 0.5, 2.0).unwrap(),
    ] {
        let a = check_admissible(&k, &schedule(), 0.5, 2.0, DEFAULT_TOL, &cfg()).unwrap();
        assert!(a.holds);
        let u = check_uniform(&k, &schedule(), &DEFAULT_RADII, 1.0, DEFAULT_TOL, &cfg()).unwrap();
        assert_eq!(u.mass_escape, u.attenuation, "{}", k.name);
    }
}

#[test]
fn uniform_implies_admissible() {
    let kernels = [
        make_fractional(1, 2.0).unwrap(),
        make_shifted_mollifier(1, Drift::inverse()).unwrap(),
    ];
    for k in &kernels {
        let u = check_uniform(k, &schedule(), &DEFAULT_RADII, 1.0, DEFAULT_TOL, &cfg()).unwrap();
        assert!(u.holds, "{}: {u:?}", k.name);
        let a = check_admissible(k, &schedule(), 0.5, 2.0, DEFAULT_TOL, &cfg()).unwrap();
        assert!(a.holds, "{}: {a:?}", k.name);
    }
}

#[test]
fn zero_kernel_fails_everything() {
    let k = make_zero(1).unwrap();
    let a = check_admissible(&k, &schedule(), 0.5, 2.0, DEFAULT_TOL, &cfg()).unwrap();
    assert!(!a.holds);
    assert_eq!(a.evidence[0].limit, 0.0);
    let u = check_uniform(&k, &schedule(), &DEFAULT_RADII, 2.0, DEFAULT_TOL, &cfg()).unwrap();
    assert!(!u.holds);
}

#[test]
fn schedule_points_above_s_are_skipped() {
    let k = make_fractional(1, 2.0).unwrap();
    let mut values = vec![0.8, 0.6];
    values.extend((0..8).map(|k| 0.1 * 0.5f64.powi(k)));
    let sched = EpsilonSchedule::new(values).unwrap();
    let a = check_admissible(&k, &sched, 0.5, 2.0, DEFAULT_TOL, &cfg()).unwrap();
    assert_eq!(a.warnings.len(), 2);
    assert!(a.warnings[0].contains("ε = 0.8"));
    assert!(a.holds, "{a:?}");

    let sched = EpsilonSchedule::new(vec![0.8, 0.6, 0.1, 0.05]).unwrap();
    let a = check_admissible(&k, &sched, 0.5, 2.0, DEFAULT_TOL, &cfg()).unwrap();
    assert!(!a.holds);
    assert!(a.evidence.is_empty());
}

#[test]
fn preconditions_are_enforced() {
    let k = make_fractional(1, 2.0).unwrap();
    let short = EpsilonSchedule::new(vec![0.1, 0.05]).unwrap();
    assert!(matches!(
        check_uniform(&k, &short, &DEFAULT_RADII, 2.0, DEFAULT_TOL, &cfg()),
        Err(Error::Arity(2))
    ));
    assert!(check_uniform(&k, &schedule(), &[1.0], 2.0, DEFAULT_TOL, &cfg()).is_err());
    assert!(check_iterated(&k, &schedule(), &[1.0, 4.0, 2.0], 2.0, DEFAULT_TOL, &cfg()).is_err());
    assert!(tail_mass(&k, 0.1, 0.0, &cfg()).is_err());
    assert!(tail_mass(&k, 1.5, 1.0, &cfg()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monotone_in_radius(
        which in 0usize..5,
        eps in 0.01f64..0.45,
        r1 in 0.1f64..5.0,
        dr in 0.01f64..3.0,
    ) {
        let k = match which {
            0 => make_fractional(1, 2.0).unwrap(),
            1 => make_log_corrected(2, 2.0).unwrap(),
            2 => make_capped_fractional(3, 1.0).unwrap(),
            3 => make_shifted_mollifier(1, Drift::constant(1.5)).unwrap(),
            _ => make_shifted_gaussian(1).unwrap(),
        };
        let r2 = r1 + dr;
        let (m1, m2) = (tail_mass(&k, eps, r1, &cfg()).unwrap(), tail_mass(&k, eps, r2, &cfg()).unwrap());
        prop_assert!(m1 >= m2 - 1e-12, "{m1} < {m2}");
        prop_assert!(m2 >= -1e-15);
        let s1 = short_range_moment(&k, eps, r1, 2.0, &cfg()).unwrap();
        let s2 = short_range_moment(&k, eps, r2, 2.0, &cfg()).unwrap();
        prop_assert!(s2 >= s1 - 1e-12, "{s1} > {s2}");
        prop_assert!(s1 >= -1e-15);
    }
}
