//! Adaptive Gauss–Kronrod on finite intervals, and exponentially mapped
//! tails for singular endpoints and infinite ranges.
//!
//! A radial integral ∫ f(r) dr is cut at its breakpoints. Finite pieces use
//! global adaptive bisection. A flagged singular endpoint `a` is mapped by
//! r = a + w·e^(−t) and an infinite upper end by r = T·e^(t), which turns
//! algebraic behaviour r^α into exponential behaviour e^(−κt) in t. The mapped
//! integrals are accumulated panel by panel; once the local decay rate κ is
//! stable the remainder is added in closed form (g(T)/κ).

use super::gauss::gk15;
use super::{IntegralResult, QuadratureConfig};
use crate::error::{Error, Result};

/// Accumulated result of one integration piece.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Piece {
    pub value: f64,
    pub error: f64,
    pub abs: f64,
    pub evals: usize,
    pub converged: bool,
}

impl Piece {
    fn absorb(&mut self, other: Piece) {
        self.value += other.value;
        self.error += other.error;
        self.abs += other.abs;
        self.evals += other.evals;
        self.converged &= other.converged;
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
    depth: usize,
}

/// Global adaptive bisection on a finite interval.
pub(crate) fn adaptive_gk<F>(
    f: &mut F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    cfg: &QuadratureConfig,
) -> Result<Piece>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(Piece {
            converged: true,
            ..Piece::default()
        });
    }
    let mut evals = 15;
    let first = gk15(f, a, b)?;
    let mut segments = vec![Segment {
        a,
        b,
        value: first.value,
        error: first.error,
        abs: first.abs,
        depth: 0,
    }];
    let mut frozen: Vec<Segment> = Vec::new();
    let mut total = first.value;
    let mut total_err = first.error;
    let mut converged = true;

    loop {
        let target = abs_tol.max(rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        if segments.len() + frozen.len() >= cfg.max_intervals {
            converged = false;
            break;
        }
        // Worst open segment; ties resolve to the leftmost for determinism.
        let Some((idx, _)) = segments
            .iter()
            .enumerate()
            .max_by(|(i, s), (j, t)| s.error.total_cmp(&t.error).then(j.cmp(i)))
        else {
            converged = false;
            break;
        };
        let seg = segments.swap_remove(idx);
        let mid = 0.5 * (seg.a + seg.b);
        if seg.depth >= cfg.max_depth || mid <= seg.a || mid >= seg.b {
            frozen.push(seg);
            if segments.is_empty() {
                converged = false;
                break;
            }
            continue;
        }
        let left = gk15(f, seg.a, mid)?;
        let right = gk15(f, mid, seg.b)?;
        evals += 30;
        total += left.value + right.value - seg.value;
        total_err += left.error + right.error - seg.error;
        for (lo, hi, r) in [(seg.a, mid, left), (mid, seg.b, right)] {
            segments.push(Segment {
                a: lo,
                b: hi,
                value: r.value,
                error: r.error,
                abs: r.abs,
                depth: seg.depth + 1,
            });
        }
    }

    segments.extend(frozen);
    segments.sort_by(|s, t| s.a.total_cmp(&t.a));
    let values: Vec<f64> = segments.iter().map(|s| s.value).collect();
    let errors: Vec<f64> = segments.iter().map(|s| s.error).collect();
    let value = pairwise_sum(&values);
    let error = pairwise_sum(&errors);
    let abs = segments.iter().map(|s| s.abs).sum::<f64>();
    let converged = converged && error <= abs_tol.max(rel_tol * value.abs()) * (1.0 + 1e-12);
    Ok(Piece {
        value,
        error,
        abs,
        evals,
        converged,
    })
}

/// Summation in a fixed binary tree, independent of evaluation order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// ∫₀^∞ g(t) dt for g with eventually exponential (or faster) decay.
///
/// `rate_hint` is a lower bound κ₀ on the decay rate, when known; `t_max`
/// is the largest t at which the mapping is still representable.
pub(crate) fn exp_tail<G>(
    g: &mut G,
    t_max: f64,
    rate_hint: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<Piece>
where
    G: FnMut(f64) -> Result<f64>,
{
    let mut acc = Piece {
        converged: true,
        ..Piece::default()
    };
    let mut t0 = 0.0;
    let mut width: f64 = 1.0;
    let mut non_decaying = 0usize;

    loop {
        let t1 = (t0 + width).min(t_max);
        let panel = adaptive_gk(g, t0, t1, cfg.rel_tol * 0.1, cfg.abs_tol * 0.1, cfg)?;
        acc.absorb(panel);
        t0 = t1;
        if t0 >= t_max {
            acc.converged = false;
            return Ok(acc);
        }

        let h = 0.25 * width;
        let g3 = g(t0)?;
        let g2 = g(t0 - h)?;
        let g1 = g(t0 - 2.0 * h)?;
        acc.evals += 3;
        let target = cfg.abs_tol.max(cfg.rel_tol * acc.value.abs());

        if g3 == 0.0 && g2 == 0.0 {
            if panel.value == 0.0 || g1 == 0.0 {
                return Ok(acc);
            }
        } else if g1 * g2 > 0.0 && g2 * g3 > 0.0 {
            let a1 = (g1 / g2).ln() / h;
            let a2 = (g2 / g3).ln() / h;
            if a2 > 0.0 {
                non_decaying = 0;
                let tail = g3 / a2;
                if tail.abs() <= cfg.truncation_tail_tol * acc.value.abs() {
                    acc.value += tail;
                    acc.error += tail.abs();
                    return Ok(acc);
                }
                if let Some(kappa) = rate_hint.filter(|k| *k > 0.0) {
                    let bound = g3.abs() / kappa;
                    if bound <= cfg.truncation_tail_tol * acc.value.abs() {
                        acc.error += bound;
                        return Ok(acc);
                    }
                }
                let drift = (a1 - a2).abs() / a2;
                let tail_err =
                    2.0 * tail.abs() * drift + 4.0 * f64::EPSILON * tail.abs() / (a2 * h);
                if tail_err <= 0.1 * cfg.abs_tol.max(cfg.rel_tol * (acc.value + tail).abs()) {
                    acc.value += tail;
                    acc.error += tail_err;
                    acc.abs += tail.abs();
                    return Ok(acc);
                }
            } else if a1 <= 0.0 {
                non_decaying += 1;
                if t0 > 24.0 && non_decaying >= 3 {
                    return Err(Error::Divergent(format!(
                        "mapped integrand stops decaying (local rate {a2:.3e} at t = {t0:.1})"
                    )));
                }
            }
        } else if g3.abs() <= f64::MIN_POSITIVE && panel.error <= target {
            return Ok(acc);
        }
        width = (width * 2.0).min(16.0);
    }
}

/// Domain description for [`integrate_radial_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDomain {
    pub lower: f64,
    /// `f64::INFINITY` for a semi-infinite range.
    pub upper: f64,
    pub singular_at_lower: bool,
    /// κ such that the integrand is O(r^(−1−κ)) as r → ∞.
    pub decay_hint: Option<f64>,
    /// Points of non-smoothness; those outside (lower, upper) are ignored.
    pub breakpoints: Vec<f64>,
}

impl RadialDomain {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            singular_at_lower: false,
            decay_hint: None,
            breakpoints: Vec::new(),
        }
    }

    pub fn singular(mut self, yes: bool) -> Self {
        self.singular_at_lower = yes;
        self
    }

    pub fn decay(mut self, hint: Option<f64>) -> Self {
        self.decay_hint = hint;
        self
    }

    pub fn breaks(mut self, pts: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(pts);
        self
    }
}

/// Integrate `f` over `[lower, upper]` (`upper` may be +∞).
///
/// Non-finite integrand values abort with [`Error::NonFinite`] naming the radius.
pub fn integrate_radial<F>(
    mut f: F,
    lower: f64,
    upper: f64,
    singular_at_lower: bool,
    decay_hint: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult>
where
    F: FnMut(f64) -> f64,
{
    let domain = RadialDomain::new(lower, upper)
        .singular(singular_at_lower)
        .decay(decay_hint);
    integrate_radial_with(|r| Ok(f(r)), &domain, cfg)
}

/// Fallible-integrand version of [`integrate_radial`] with breakpoints.
pub fn integrate_radial_with<F>(
    mut f: F,
    domain: &RadialDomain,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    let RadialDomain {
        lower,
        upper,
        singular_at_lower,
        decay_hint,
        ..
    } = *domain;
    if !lower.is_finite() || upper.is_nan() || upper < lower {
        return Err(Error::InvalidParameter(format!(
            "radial range [{lower}, {upper}] is empty or malformed"
        )));
    }
    if upper == lower {
        return Ok(IntegralResult::zero());
    }

    let mut checked = |r: f64| -> Result<f64> {
        let v = f(r)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at: r, value: v })
        }
    };

    let mut edges: Vec<f64> = domain
        .breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lower && b < upper && b.is_finite())
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let infinite = upper.is_infinite();
    let mut pieces: Vec<Piece> = Vec::new();
    let tail_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol * 0.25,
        ..cfg.clone()
    };
    let mut start = lower;

    if singular_at_lower {
        let end = edges
            .first()
            .copied()
            .unwrap_or(if infinite { lower + 1.0 } else { upper });
        let w = end - lower;
        let t_max = if lower > 0.0 {
            (w / (lower * 4.0 * f64::EPSILON)).ln()
        } else {
            w.ln() + 700.0
        };
        let mut g = |t: f64| -> Result<f64> {
            let d = w * (-t).exp();
            if d == 0.0 {
                return Ok(0.0);
            }
            Ok(checked(lower + d)? * d)
        };
        pieces.push(exp_tail(&mut g, t_max, None, &tail_cfg)?);
        start = end;
        if !edges.is_empty() {
            edges.remove(0);
        }
    }

    let finite_end = if infinite {
        let last = edges.last().copied().unwrap_or(start);
        if last > 0.0 {
            last
        } else {
            edges.push(start + 1.0);
            start + 1.0
        }
    } else {
        upper
    };
    if !infinite {
        edges.push(upper);
    }
    let abs_share = cfg.abs_tol * 0.5 / (edges.len() + 2) as f64;
    for &b in &edges {
        if b > start {
            pieces.push(adaptive_gk(
                &mut checked,
                start,
                b,
                cfg.rel_tol * 0.5,
                abs_share,
                cfg,
            )?);
            start = b;
        }
    }

    if infinite {
        let base = finite_end;
        let t_max = 700.0 - base.ln();
        let mut g = |t: f64| -> Result<f64> {
            let r = base * t.exp();
            Ok(checked(r)? * r)
        };
        pieces.push(exp_tail(&mut g, t_max, decay_hint, &tail_cfg)?);
    }

    Ok(IntegralResult::from_pieces(&pieces, cfg))
}

/// Integrate over a finite interval `[a, b]` with interior breakpoints.
pub fn integrate_interval<F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if b < a {
        let r = integrate_interval(f, b, a, breakpoints, cfg)?;
        return Ok(IntegralResult {
            value: -r.value,
            ..r
        });
    }
    let mut edges: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges.push(b);
    let mut pieces = Vec::with_capacity(edges.len());
    let mut start = a;
    let mut checked = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at: x, value: v })
        }
    };
    let abs_share = cfg.abs_tol * 0.5 / edges.len() as f64;
    for e in edges {
        pieces.push(adaptive_gk(
            &mut checked,
            start,
            e,
            cfg.rel_tol * 0.5,
            abs_share,
            cfg,
        )?);
        start = e;
    }
    Ok(IntegralResult::from_pieces(&pieces, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn singular_power_law_on_unit_interval() {
        let r = integrate_radial(|r| r.powf(-1.0 + 0.8), 0.0, 1.0, true, None, &cfg()).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.25).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn heavy_tail_power_law() {
        let r = integrate_radial(
            |r| r.powf(-1.2),
            1.0,
            f64::INFINITY,
            false,
            Some(0.2),
            &cfg(),
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.value - 5.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn very_slow_tail_is_closed_analytically() {
        // ∫₁^∞ r^(−1.0001) dr = 10⁴; brute truncation would need r ≈ e^(3·10⁵).
        let r = integrate_radial(
            |r| r.powf(-1.0001),
            1.0,
            f64::INFINITY,
            false,
            Some(1e-4),
            &cfg(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(((r.value - 1e4) / 1e4).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn log_weighted_singular_integral() {
        let r = integrate_radial(
            |r| (1.0 / r).ln() * r.powf(0.8),
            0.0,
            1.0,
            true,
            None,
            &cfg(),
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0 / (1.8 * 1.8)).abs() < 1e-12);
    }

    #[test]
    fn nan_is_reported_with_radius() {
        let err = integrate_radial(
            |r| if r > 0.5 { f64::NAN } else { 1.0 },
            0.0,
            1.0,
            false,
            None,
            &cfg(),
        )
        .unwrap_err();
        match err {
            Error::NonFinite { at, .. } => assert!(at > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integrable_singularity_is_divergent() {
        let err = integrate_radial(|r| 1.0 / r, 0.0, 1.0, true, None, &cfg()).unwrap_err();
        assert!(matches!(err, Error::Divergent(_)), "{err:?}");
    }

    #[test]
    fn breakpoints_capture_jumps() {
        let domain = RadialDomain::new(0.0, 3.0).breaks([1.0]);
        let r = integrate_radial_with(|x| Ok(if x < 1.0 { 2.0 } else { 0.5 }), &domain, &cfg())
            .unwrap();
        assert!((r.value - 3.0).abs() < 1e-14);
    }

    #[test]
    fn compact_integrand_on_infinite_range() {
        let domain = RadialDomain::new(0.0, f64::INFINITY).breaks([1.0]);
        let r = integrate_radial_with(|x| Ok(if x < 1.0 { 1.0 } else { 0.0 }), &domain, &cfg())
            .unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (1..=100).map(|k| 1.0 / k as f64).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-13);
    }
}
