//! The nonlocal energy ℱ_ε(u) = ∫ρ_ε(z)·A_u(z) dz, its split at |z| = R,
//! and the ratio ℱ_ε(u)/(2‖u‖ₚᵖ).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::kernel::KernelFamily;
use crate::quadrature::{IntegralResult, QuadratureConfig};

pub const CSV_HEADER: &str = "epsilon,R,far,near,total,ms_ratio,err";

/// Sphere-averaged modulus r ↦ Ā_u(r) for one (u, p), memoized on r.
///
/// Values are pure functions of r, so sharing a memo between threads or
/// between ε values never changes a result.
#[derive(Debug)]
pub struct ModulusMemo {
    u: TestFunction,
    p: f64,
    cfg: QuadratureConfig,
    norm: f64,
    values: Mutex<HashMap<u64, f64>>,
}

impl ModulusMemo {
    pub fn new(u: &TestFunction, p: f64, cfg: &QuadratureConfig) -> Result<Self> {
        let norm = u.lp_norm_p(p, cfg)?;
        Ok(Self {
            u: u.clone(),
            p,
            cfg: cfg.clone(),
            norm,
            values: Mutex::new(HashMap::new()),
        })
    }

    pub fn function(&self) -> &TestFunction {
        &self.u
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// ‖u‖ₚᵖ.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.values.lock().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn modulus(&self, r: f64) -> Result<f64> {
        if r >= self.u.saturation_radius() {
            return Ok(2.0 * self.norm);
        }
        let key = r.to_bits();
        if let Some(v) = self.values.lock().expect("memo lock").get(&key) {
            return Ok(*v);
        }
        let v = self.u.averaged_modulus(self.p, r, &self.cfg)?;
        self.values.lock().expect("memo lock").insert(key, v);
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub epsilon: f64,
    pub split_radius: f64,
    /// I_{ε,R}: the part of ℱ_ε from |z| > R.
    pub far: f64,
    /// II_{ε,R}: the part from |z| < R.
    pub near: f64,
    /// ℱ_ε(u), computed without the split at R.
    pub total: f64,
    /// total/(2‖u‖ₚᵖ); `None` for u = 0.
    pub ms_ratio: Option<f64>,
    /// Summed error estimates of far, near and total, plus a rounding allowance.
    pub error_estimate: f64,
}

impl EnergyBreakdown {
    /// |far + near − total|.
    pub fn split_mismatch(&self) -> f64 {
        (self.far + self.near - self.total).abs()
    }

    pub fn csv_row(&self) -> String {
        let ratio = self.ms_ratio.map_or(String::new(), |r| format!("{r:.16e}"));
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            self.epsilon,
            self.split_radius,
            self.far,
            self.near,
            self.total,
            ratio,
            self.error_estimate
        )
    }
}

pub fn breakdowns_to_csv(rows: &[EnergyBreakdown]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

fn cell(kernel: &KernelFamily, eps: f64, radius: Option<f64>, u: &TestFunction) -> String {
    match radius {
        Some(r) => format!(
            "kernel `{}`, ε = {eps}, R = {r}, u = `{}`",
            kernel.name, u.name
        ),
        None => format!("kernel `{}`, ε = {eps}, u = `{}`", kernel.name, u.name),
    }
}

fn check(kernel: &KernelFamily, eps: f64, memo: &ModulusMemo) -> Result<()> {
    kernel.check_epsilon(eps)?;
    let u = memo.function();
    if kernel.dimension != u.dimension {
        return Err(Error::InvalidParameter(format!(
            "kernel `{}` lives in N = {} but u = `{}` in N = {}",
            kernel.name, kernel.dimension, u.name, u.dimension
        )));
    }
    if u.dimension > 1 && kernel.shift_distance(eps) > 0.0 && !u.modulus_is_radial() {
        return Err(Error::InvalidParameter(format!(
            "drifting kernel `{}` needs a radial translation modulus in N ≥ 2; `{}` has none",
            kernel.name, u.name
        )));
    }
    Ok(())
}

/// ∫_{lo<|z|<hi} ρ_ε Ā_u.
fn weighted(
    kernel: &KernelFamily,
    eps: f64,
    lo: f64,
    hi: f64,
    memo: &ModulusMemo,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    kernel
        .radial_integral(
            eps,
            lo,
            hi,
            |r| memo.modulus(r),
            &memo.function().modulus_breakpoints(),
            cfg,
        )?
        .require_converged(|| format!("energy integral over {lo} < |z| < {hi}"))
}

/// 2‖u‖ₚᵖ·∫_{lo<|z|<hi} ρ_ε, where A_u has saturated.
fn saturated(
    kernel: &KernelFamily,
    eps: f64,
    lo: f64,
    hi: f64,
    memo: &ModulusMemo,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    let scale = 2.0 * memo.norm();
    if hi.is_infinite() {
        if let Some(v) = kernel.closed_form_tail_mass(eps, lo) {
            return Ok(IntegralResult {
                value: scale * v?,
                ..IntegralResult::zero()
            });
        }
    }
    let mass = kernel
        .radial_integral(eps, lo, hi, |_| Ok(1.0), &[], cfg)?
        .require_converged(|| format!("kernel mass over {lo} < |z| < {hi}"))?;
    Ok(mass.scaled(scale))
}

fn piece(
    kernel: &KernelFamily,
    eps: f64,
    lo: f64,
    hi: f64,
    memo: &ModulusMemo,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    let sat = memo.function().saturation_radius();
    if hi <= sat {
        weighted(kernel, eps, lo, hi, memo, cfg)
    } else if lo >= sat {
        saturated(kernel, eps, lo, hi, memo, cfg)
    } else {
        Ok(weighted(kernel, eps, lo, sat, memo, cfg)?
            .combine(saturated(kernel, eps, sat, hi, memo, cfg)?))
    }
}

/// ℱ_ε(u) with its error estimate, reusing a memo of Ā_u.
pub fn energy_with(
    kernel: &KernelFamily,
    eps: f64,
    memo: &ModulusMemo,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    check(kernel, eps, memo)?;
    if memo.function().is_zero() {
        return Ok(IntegralResult::zero());
    }
    piece(kernel, eps, 0.0, f64::INFINITY, memo, cfg)
        .map_err(|e| e.in_cell(cell(kernel, eps, None, memo.function())))
}

pub fn energy(
    kernel: &KernelFamily,
    eps: f64,
    u: &TestFunction,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let memo = ModulusMemo::new(u, p, cfg)?;
    Ok(energy_with(kernel, eps, &memo, cfg)?.value)
}

pub fn energy_split_with(
    kernel: &KernelFamily,
    eps: f64,
    radius: f64,
    memo: &ModulusMemo,
    cfg: &QuadratureConfig,
) -> Result<EnergyBreakdown> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "split radius must be positive and finite, got {radius}"
        )));
    }
    check(kernel, eps, memo)?;
    let u = memo.function();
    let run = || -> Result<EnergyBreakdown> {
        let (far, near, total) = if u.is_zero() {
            (
                IntegralResult::zero(),
                IntegralResult::zero(),
                IntegralResult::zero(),
            )
        } else {
            (
                piece(kernel, eps, radius, f64::INFINITY, memo, cfg)?,
                piece(kernel, eps, 0.0, radius, memo, cfg)?,
                piece(kernel, eps, 0.0, f64::INFINITY, memo, cfg)?,
            )
        };
        let rounding =
            8.0 * f64::EPSILON * (far.value.abs() + near.value.abs() + total.value.abs());
        let ms_ratio = (memo.norm() > 0.0).then(|| total.value / (2.0 * memo.norm()));
        Ok(EnergyBreakdown {
            epsilon: eps,
            split_radius: radius,
            far: far.value,
            near: near.value,
            total: total.value,
            ms_ratio,
            error_estimate: far.error_estimate
                + near.error_estimate
                + total.error_estimate
                + rounding,
        })
    };
    run().map_err(|e| e.in_cell(cell(kernel, eps, Some(radius), u)))
}

pub fn energy_split(
    kernel: &KernelFamily,
    eps: f64,
    u: &TestFunction,
    p: f64,
    radius: f64,
    cfg: &QuadratureConfig,
) -> Result<EnergyBreakdown> {
    let memo = ModulusMemo::new(u, p, cfg)?;
    energy_split_with(kernel, eps, radius, &memo, cfg)
}

/// ℱ_ε(u)/(2‖u‖ₚᵖ).
pub fn ms_ratio(
    kernel: &KernelFamily,
    eps: f64,
    u: &TestFunction,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let memo = ModulusMemo::new(u, p, cfg)?;
    if !(memo.norm() > 0.0) {
        return Err(Error::UndefinedRatio(format!(
            "‖u‖ₚᵖ = 0 for u = `{}`",
            u.name
        )));
    }
    Ok(energy_with(kernel, eps, &memo, cfg)?.value / (2.0 * memo.norm()))
}
