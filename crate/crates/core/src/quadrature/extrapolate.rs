//! ε → 0 limit estimates from a decreasing sample sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    pub uncertainty: f64,
    /// Fitted power γ in value ≈ L + c·ε^γ; `None` when the fit was rejected
    /// and the last sample was used instead.
    pub exponent: Option<f64>,
}

const WINDOW: usize = 5;
const MAX_SPREAD: f64 = 0.25;

/// Fit value ≈ L + c·ε^γ on the last five samples by log-differencing.
///
/// Each consecutive triple yields a γ estimate; if they disagree by more
/// than 25% (or the differences do not shrink monotonically) the last
/// sample is returned with uncertainty |last − second to last|.
pub fn extrapolate_limit(samples: &[(f64, f64)]) -> Result<Extrapolation> {
    if samples.len() < 3 {
        return Err(Error::Arity(samples.len()));
    }
    for w in samples.windows(2) {
        if !(w[0].0 > w[1].0 && w[1].0 > 0.0) {
            return Err(Error::InvalidParameter(
                "extrapolation needs strictly decreasing positive ε".into(),
            ));
        }
    }
    if samples.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample value".into()));
    }

    let window = &samples[samples.len().saturating_sub(WINDOW)..];
    let n = window.len();
    let last = window[n - 1].1;
    let fallback = Extrapolation {
        limit: last,
        uncertainty: (last - window[n - 2].1).abs(),
        exponent: None,
    };

    let diffs: Vec<f64> = window.windows(2).map(|w| w[0].1 - w[1].1).collect();
    let mut gammas = Vec::with_capacity(n - 2);
    let mut limits = Vec::with_capacity(n - 2);
    for j in 0..n - 2 {
        let (d0, d1) = (diffs[j], diffs[j + 1]);
        if d0 == 0.0 || d1 == 0.0 {
            return Ok(fallback);
        }
        let ratio = d1 / d0;
        if !(ratio > 0.0 && ratio < 1.0) {
            return Ok(fallback);
        }
        let (e0, e1, e2) = (window[j].0, window[j + 1].0, window[j + 2].0);
        let Some(gamma) = solve_exponent(e1 / e0, e2 / e0, ratio) else {
            return Ok(fallback);
        };
        let c = d1 / (e1.powf(gamma) - e2.powf(gamma));
        gammas.push(gamma);
        limits.push(window[j + 2].1 - c * e2.powf(gamma));
    }

    let (lo, hi) = gammas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| {
            (lo.min(g), hi.max(g))
        });
    let mean = gammas.iter().sum::<f64>() / gammas.len() as f64;
    if (hi - lo) > MAX_SPREAD * mean {
        return Ok(fallback);
    }
    let limit = *limits.last().expect("at least one triple");
    let uncertainty = if limits.len() >= 2 {
        (limit - limits[limits.len() - 2]).abs()
    } else {
        (limit - last).abs()
    };
    Ok(Extrapolation {
        limit,
        uncertainty,
        exponent: gammas.last().copied(),
    })
}

/// Solve (s1^γ − s2^γ)/(1 − s1^γ) = ratio for γ, where 0 < s2 < s1 < 1.
fn solve_exponent(s1: f64, s2: f64, ratio: f64) -> Option<f64> {
    let h = |g: f64| {
        let a = s1.powf(g);
        (a - s2.powf(g)) / (1.0 - a)
    };
    // Geometric spacing has the explicit solution.
    if ((s1 * s1 - s2) / s2).abs() < 1e-12 {
        let g = ratio.ln() / s1.ln();
        return (g > 0.0 && g.is_finite()).then_some(g);
    }
    let (mut lo, mut hi) = (1e-8, 60.0);
    let (h_lo, h_hi) = (h(lo), h(hi));
    if !(h_lo >= ratio && ratio >= h_hi) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
