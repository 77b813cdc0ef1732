use std::f64::consts::PI;

use super::adaptive::integrate_interval;
use super::gauss::gauss_legendre;
use super::QuadratureConfig;
use crate::error::{Error, Result};
use crate::special::gamma;

/// Mean of `f` over the sphere of radius `r` centred at the origin.
///
/// N = 1 averages the two points ±r; N = 2 uses the `order`-point trapezoid
/// rule on the circle; N = 3 uses a Gauss–Legendre × trapezoid product grid.
pub fn angular_average<F>(f: F, r: f64, dimension: usize, order: usize) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let origin = vec![0.0; dimension];
    angular_average_about(f, &origin, r, order)
}

/// Mean of `f` over the sphere of radius `r` about `center`.
pub fn angular_average_about<F>(mut f: F, center: &[f64], r: f64, order: usize) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if order < 2 {
        return Err(Error::InvalidParameter(format!(
            "angular order must be at least 2, got {order}"
        )));
    }
    let dimension = center.len();
    match dimension {
        1 => {
            let a = f(&[center[0] + r])?;
            let b = f(&[center[0] - r])?;
            Ok(0.5 * (a + b))
        }
        2 => {
            let mut sum = 0.0;
            for j in 0..order {
                let theta = 2.0 * PI * j as f64 / order as f64;
                sum += f(&[center[0] + r * theta.cos(), center[1] + r * theta.sin()])?;
            }
            Ok(sum / order as f64)
        }
        3 => {
            let (mu, w) = gauss_legendre(order);
            let mut sum = 0.0;
            for (m, wm) in mu.iter().zip(&w) {
                let s = (1.0 - m * m).max(0.0).sqrt();
                let mut ring = 0.0;
                for j in 0..order {
                    let phi = 2.0 * PI * j as f64 / order as f64;
                    ring += f(&[
                        center[0] + r * s * phi.cos(),
                        center[1] + r * s * phi.sin(),
                        center[2] + r * m,
                    ])?;
                }
                sum += 0.5 * wm * ring / order as f64;
            }
            Ok(sum)
        }
        n => Err(Error::UnsupportedDimension(n)),
    }
}

/// Mean of g(|z|) over the sphere |z − a·e₁| = r in ℝᴺ.
///
/// Only the distribution of |z| on the sphere matters, so any N reduces to
/// one dimension: N = 3 integrates g(s)·s over [|a−r|, a+r], other N
/// integrate over the polar angle against sin^(N−2)θ. `breaks` are values
/// of |z| where g is not smooth.
pub fn shell_average<F>(
    mut g: F,
    a: f64,
    r: f64,
    dimension: usize,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    if a == 0.0 || r == 0.0 {
        return g(a + r);
    }
    if dimension == 1 {
        return Ok(0.5 * (g(a + r)? + g((a - r).abs())?));
    }
    let lo = (a - r).abs();
    let hi = a + r;
    let inner = cfg.tightened(0.1);
    let what = || format!("shell average at offset {a}, radius {r}");
    if dimension == 3 {
        let v = integrate_interval(|s| Ok(g(s)? * s), lo, hi, breaks, &inner)?
            .require_converged(what)?;
        return Ok(v.value / (2.0 * a * r));
    }
    let k = dimension as i32 - 2;
    let angles: Vec<f64> = breaks
        .iter()
        .filter(|&&b| b > lo && b < hi)
        .map(|&b| {
            ((b * b - a * a - r * r) / (2.0 * a * r))
                .clamp(-1.0, 1.0)
                .acos()
        })
        .collect();
    let v = integrate_interval(
        |t| {
            let s = (a * a + r * r + 2.0 * a * r * t.cos()).max(0.0).sqrt();
            Ok(g(s)? * t.sin().powi(k))
        },
        0.0,
        PI,
        &angles,
        &inner,
    )?
    .require_converged(what)?;
    let n = dimension as f64;
    let weight = PI.sqrt() * gamma(0.5 * (n - 1.0)) / gamma(0.5 * n);
    Ok(v.value / weight)
}
