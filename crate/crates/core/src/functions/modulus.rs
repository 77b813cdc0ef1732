//! Evaluation paths for A_u(z), and cell integrals for grid functions.

use super::{Grid, Shape, TestFunction};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_interval, QuadratureConfig};
use crate::special::sphere_area;

/// Representative of {z, −z} whose first non-zero coordinate is positive.
///
/// A_u(z) = A_u(−z), so evaluating on one representative makes the symmetry exact.
fn canonical(z: &[f64]) -> Vec<f64> {
    match z.iter().find(|v| **v != 0.0) {
        Some(v) if *v < 0.0 => z.iter().map(|x| -x).collect(),
        _ => z.to_vec(),
    }
}

pub(super) fn translation_modulus(
    u: &TestFunction,
    p: f64,
    z: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if u.is_zero() {
        return Ok(0.0);
    }
    let z = canonical(z);
    let d = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if d == 0.0 {
        return Ok(0.0);
    }
    if d >= u.saturation_radius() {
        return Ok(2.0 * u.lp_norm_p(p, cfg)?);
    }
    let amp = u.amplitude.abs().powf(p);
    match &u.shape {
        Shape::Indicator { a, b } => Ok(2.0 * d.min(b - a) * amp),
        Shape::Gaussian { width } if p == 2.0 => {
            let norm = u.closed_lp_norm(2.0).expect("closed Gaussian norm");
            Ok(-2.0 * norm * (-d * d / (2.0 * width * width)).exp_m1())
        }
        Shape::Grid(g) => grid_modulus(g, p, &z, cfg).map(|v| v * amp),
        _ if u.dimension == 1 => line_modulus(&unit(u), p, d, cfg).map(|v| v * amp),
        _ if u.radial_shape().is_some() => cylinder_modulus(u, p, d, cfg).map(|v| v * amp),
        Shape::SeparatedPair { .. } => box_modulus(&unit(u), p, &z, cfg).map(|v| v * amp),
        _ => unreachable!("every shape has an evaluation path"),
    }
}

/// u with unit amplitude, so tolerances act on the shape alone.
fn unit(u: &TestFunction) -> TestFunction {
    u.scaled(1.0 / u.amplitude)
}

/// N = 1: ∫ over the union of the two supports.
fn line_modulus(u: &TestFunction, p: f64, d: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let c = u.support_center()[0];
    let s = u.effective_radius();
    let mut breaks = vec![c - s, c + s - d, c - 0.5 * d];
    if let Shape::SeparatedPair { radius, distance } = u.shape {
        for q in [c - 0.5 * distance, c + 0.5 * distance] {
            for e in [q - radius, q + radius] {
                breaks.push(e);
                breaks.push(e - d);
            }
        }
    }
    let r = integrate_interval(
        |x| Ok((u.eval(&[x + d]) - u.eval(&[x])).abs().powf(p)),
        c - s - d,
        c + s,
        &breaks,
        cfg,
    )?;
    Ok(
        r.require_converged(|| format!("A_u(z) for `{}` at |z| = {d}", u.name))?
            .value,
    )
}

/// Radial u in N ≥ 2: with z = d·e₁ and x = (t, ρω),
/// A_u = ∫dt ∫ |𝕊^{N−2}| ρ^{N−2} |G(√((t+d)²+ρ²)) − G(√(t²+ρ²))|ᵖ dρ.
fn cylinder_modulus(u: &TestFunction, p: f64, d: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let (g, _, scale) = u.radial_shape().expect("radial shape");
    let n = u.dimension;
    let s = u.effective_radius();
    let area = sphere_area(n - 1);
    let k = n as i32 - 2;
    let mut inner_ok = true;
    let outer = integrate_interval(
        |t| {
            let mut br = Vec::with_capacity(2);
            if t.abs() < s {
                br.push((s * s - t * t).sqrt());
            }
            if (t + d).abs() < s {
                br.push((s * s - (t + d) * (t + d)).sqrt());
            }
            let inner = integrate_interval(
                |rho| {
                    let r2 = rho * rho;
                    let a = g(((t + d) * (t + d) + r2).sqrt() / scale);
                    let b = g((t * t + r2).sqrt() / scale);
                    Ok(area * rho.powi(k) * (a - b).abs().powf(p))
                },
                0.0,
                s,
                &br,
                cfg,
            )?;
            inner_ok &= inner.converged;
            Ok(inner.value)
        },
        -d - s,
        s,
        &[-s, s - d, -0.5 * d],
        cfg,
    )?;
    if !inner_ok {
        return Err(Error::NonConvergence(format!(
            "inner integral of A_u for `{}` at |z| = {d}",
            u.name
        )));
    }
    Ok(outer
        .require_converged(|| format!("A_u(z) for `{}` at |z| = {d}", u.name))?
        .value)
}

/// Iterated adaptive cubature over a box, one axis per level.
#[allow(clippy::too_many_arguments)]
fn nested<F>(
    f: &mut F,
    lo: &[f64],
    hi: &[f64],
    breaks: &[Vec<f64>],
    x: &mut Vec<f64>,
    axis: usize,
    cfg: &QuadratureConfig,
    ok: &mut bool,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if axis == lo.len() {
        return Ok(f(x));
    }
    let r = integrate_interval(
        |t| {
            x[axis] = t;
            nested(f, lo, hi, breaks, x, axis + 1, cfg, ok)
        },
        lo[axis],
        hi[axis],
        &breaks[axis],
        cfg,
    )?;
    *ok &= r.converged;
    Ok(r.value)
}

/// Non-radial compact u in N = 2, 3 by iterated cubature over the union of supports.
fn box_modulus(u: &TestFunction, p: f64, z: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    let n = u.dimension;
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let Shape::SeparatedPair { radius, distance } = u.shape else {
        unreachable!("only the separated pair takes the box path");
    };
    let c = u.support_center();
    let s = u.effective_radius();
    let lo: Vec<f64> = (0..n).map(|i| (c[i] - s).min(c[i] - s - z[i])).collect();
    let hi: Vec<f64> = (0..n).map(|i| (c[i] + s).max(c[i] + s - z[i])).collect();
    let mut centers = Vec::new();
    for sign in [-0.5, 0.5] {
        let mut q = c.clone();
        q[0] += sign * distance;
        let shifted: Vec<f64> = q.iter().zip(z).map(|(a, b)| a - b).collect();
        centers.push(q);
        centers.push(shifted);
    }
    let breaks: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            centers
                .iter()
                .flat_map(|q| [q[i] - radius, q[i], q[i] + radius])
                .collect()
        })
        .collect();
    let mut y = vec![0.0; n];
    let mut f = |x: &[f64]| {
        for i in 0..n {
            y[i] = x[i] + z[i];
        }
        (u.eval(&y) - u.eval(x)).abs().powf(p)
    };
    let mut ok = true;
    let mut x = vec![0.0; n];
    let v = nested(&mut f, &lo, &hi, &breaks, &mut x, 0, cfg, &mut ok)?;
    if !ok {
        return Err(Error::NonConvergence(format!(
            "iterated cubature of A_u for `{}` at z = {z:?}",
            u.name
        )));
    }
    Ok(v)
}

/// Richardson combination of lattice sums at h and 2h, with a coarseness check.
fn richardson(
    fine: f64,
    coarse: f64,
    scale: f64,
    cfg: &QuadratureConfig,
    what: &str,
) -> Result<f64> {
    let err = (fine - coarse).abs() / 3.0;
    if err > cfg.grid_tol * scale.max(fine.abs()) {
        return Err(Error::Accuracy(format!(
            "grid too coarse for {what}: spacing h and 2h disagree by {:e} (relative tolerance {:e})",
            err * 3.0,
            cfg.grid_tol
        )));
    }
    Ok((4.0 * fine - coarse) / 3.0)
}

/// ∫|u_I|ᵖ for the multilinear interpolant u_I.
fn norm_integral(g: &Grid, p: f64) -> f64 {
    let breaks: Vec<Vec<f64>> = (0..g.dimension()).map(|a| g.axis_nodes(a)).collect();
    Grid::cell_cubature(&breaks, |x| g.eval(x).abs().powf(p))
}

pub(super) fn grid_lp_norm(g: &Grid, p: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let fine = norm_integral(g, p);
    let coarse = norm_integral(&g.coarsen()?, p);
    richardson(fine, coarse, fine, cfg, "‖u‖ₚᵖ")
}

fn gradient_integral(g: &Grid, p: f64) -> f64 {
    let breaks: Vec<Vec<f64>> = (0..g.dimension()).map(|a| g.axis_nodes(a)).collect();
    let mut grad = vec![0.0; g.dimension()];
    Grid::cell_cubature(&breaks, |x| {
        g.gradient(x, &mut grad);
        grad.iter().map(|v| v * v).sum::<f64>().powf(0.5 * p)
    })
}

pub(super) fn grid_gradient_lp(g: &Grid, p: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let fine = gradient_integral(g, p);
    let coarse = gradient_integral(&g.coarsen()?, p);
    richardson(fine, coarse, fine, cfg, "‖∇u‖ₚᵖ")
}

/// ∫|u_I(x+z) − u_I(x)|ᵖ over the union of the lattice box and its shift,
/// cut along the nodes and the shifted nodes so each cell sees two
/// multilinear pieces.
fn modulus_integral(g: &Grid, p: f64, z: &[f64]) -> f64 {
    let breaks: Vec<Vec<f64>> = (0..g.dimension())
        .map(|a| {
            let nodes = g.axis_nodes(a);
            let mut b: Vec<f64> = nodes.iter().map(|x| x - z[a]).collect();
            b.extend_from_slice(&nodes);
            b.sort_by(f64::total_cmp);
            b.dedup();
            b
        })
        .collect();
    let mut y = vec![0.0; z.len()];
    Grid::cell_cubature(&breaks, |x| {
        for (yi, (xi, zi)) in y.iter_mut().zip(x.iter().zip(z)) {
            *yi = xi + zi;
        }
        (g.eval(&y) - g.eval(x)).abs().powf(p)
    })
}

fn grid_modulus(g: &Grid, p: f64, z: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    let fine = modulus_integral(g, p, z);
    let coarse = modulus_integral(&g.coarsen()?, p, z);
    let scale = 2.0 * norm_integral(g, p);
    richardson(fine, coarse, scale, cfg, "A_u(z)")
}
