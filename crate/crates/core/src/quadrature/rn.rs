use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::adaptive::{integrate_radial_with, RadialDomain};
use super::angular::angular_average_about;
use super::{IntegralResult, QuadratureConfig};
use crate::error::{Error, Result};
use crate::special::sphere_area;

/// ∫_{ℝᴺ} f, N ≤ 3, as a radial integral about `center` of sphere averages.
///
/// `radial_breaks` are radii (about `center`) where the shell average is not smooth.
pub fn integrate_rn<F>(
    mut f: F,
    center: &[f64],
    radial_breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<IntegralResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = center.len();
    if n == 0 || n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let area = sphere_area(n);
    let order = cfg.angular_order;
    let domain = RadialDomain::new(0.0, f64::INFINITY).breaks(radial_breaks.iter().copied());
    let r = integrate_radial_with(
        |r| {
            let avg = angular_average_about(&mut f, center, r, order)?;
            Ok(area * r.powi(n as i32 - 1) * avg)
        },
        &domain,
        cfg,
    )?;
    Ok(r)
}

/// Monte Carlo estimate of ∫_{ℝᴺ} f by importance sampling from N(center, scale²·I).
///
/// Deterministic for a fixed `cfg.rng_seed`. The error estimate is one standard error.
pub fn integrate_rn_mc<F>(
    mut f: F,
    center: &[f64],
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = center.len();
    if n == 0 || !(scale > 0.0) || cfg.mc_samples < 2 {
        return Err(Error::InvalidParameter(
            "Monte Carlo needs N ≥ 1, scale > 0 and at least 2 samples".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let log_norm = -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() - n as f64 * scale.ln();
    let mut x = vec![0.0; n];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..cfg.mc_samples {
        let mut r2 = 0.0;
        for (xi, ci) in x.iter_mut().zip(center) {
            let xi_std: f64 = StandardNormal.sample(&mut rng);
            r2 += xi_std * xi_std;
            *xi = ci + scale * xi_std;
        }
        let v = f(&x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                at: r2.sqrt() * scale,
                value: v,
            });
        }
        let weight = v / (log_norm - 0.5 * r2).exp();
        // Welford update.
        let delta = weight - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (weight - mean);
    }
    let samples = cfg.mc_samples as f64;
    let std_err = (m2 / (samples - 1.0) / samples).sqrt();
    Ok(IntegralResult {
        value: mean,
        error_estimate: std_err,
        evaluations: cfg.mc_samples,
        converged: std_err <= cfg.abs_tol.max(cfg.rel_tol * mean.abs()),
    })
}
