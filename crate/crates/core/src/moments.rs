//! Kernel functionals (tail mass, short-range moments, the admissibility
//! integral) and the verdicts built on their ε → 0 limits.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{EpsilonSchedule, KernelFamily};
use crate::quadrature::{extrapolate_limit, Extrapolation, IntegralResult, QuadratureConfig};

pub const DEFAULT_TOL: f64 = 5e-3;
pub const DEFAULT_RADII: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
pub const CSV_HEADER: &str = "epsilon,R,tail_mass,short_range_moment";

fn cell(kernel: &KernelFamily, eps: f64, radius: f64) -> String {
    format!("kernel `{}`, ε = {eps}, R = {radius}", kernel.name)
}

fn check_cell(kernel: &KernelFamily, eps: f64, radius: f64) -> Result<()> {
    kernel.check_epsilon(eps)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive and finite, got {radius}"
        )));
    }
    Ok(())
}

/// ∫_{|z|>R} ρ_ε, in closed form when the family has one.
pub fn tail_mass(
    kernel: &KernelFamily,
    eps: f64,
    radius: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_cell(kernel, eps, radius)?;
    match kernel.closed_form_tail_mass(eps, radius) {
        Some(v) => v.map_err(|e| e.in_cell(cell(kernel, eps, radius))),
        None => Ok(tail_mass_quadrature(kernel, eps, radius, cfg)?.value),
    }
}

/// [`tail_mass`] by quadrature only, ignoring closed forms.
pub fn tail_mass_quadrature(
    kernel: &KernelFamily,
    eps: f64,
    radius: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    check_cell(kernel, eps, radius)?;
    kernel
        .radial_integral(eps, radius, f64::INFINITY, |_| Ok(1.0), &[], cfg)
        .and_then(|r| r.require_converged(|| "tail mass".into()))
        .map_err(|e| e.in_cell(cell(kernel, eps, radius)))
}

fn check_order(kernel: &KernelFamily, eps: f64, q: f64) -> Result<()> {
    if let Some(beta) = kernel.singularity_exponent(eps) {
        if q <= beta {
            return Err(Error::Divergent(format!(
                "moment of order q = {q} diverges at the origin for singularity exponent {beta}"
            )));
        }
    }
    Ok(())
}

/// ∫_{|z|<R} |z|^q ρ_ε, in closed form when the family has one.
pub fn short_range_moment(
    kernel: &KernelFamily,
    eps: f64,
    radius: f64,
    q: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_cell(kernel, eps, radius)?;
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "moment order must be positive, got {q}"
        )));
    }
    match kernel.closed_form_moment(eps, radius, q) {
        Some(v) => v.map_err(|e| e.in_cell(cell(kernel, eps, radius))),
        None => Ok(short_range_moment_quadrature(kernel, eps, radius, q, cfg)?.value),
    }
}

/// [`short_range_moment`] by quadrature only. `q = 0` gives the mass inside B_R.
pub fn short_range_moment_quadrature(
    kernel: &KernelFamily,
    eps: f64,
    radius: f64,
    q: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    check_cell(kernel, eps, radius)?;
    if !(q >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "moment order must be ≥ 0, got {q}"
        )));
    }
    check_order(kernel, eps, q)
        .and_then(|_| kernel.radial_integral(eps, 0.0, radius, |r| Ok(r.powf(q)), &[], cfg))
        .and_then(|r| r.require_converged(|| format!("moment of order {q}")))
        .map_err(|e| e.in_cell(cell(kernel, eps, radius)))
}

/// ∫(1 ∧ |z|^{sp}) ρ_ε, split exactly at |z| = 1.
pub fn admissibility_integral(
    kernel: &KernelFamily,
    eps: f64,
    s: f64,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(s > 0.0 && s < 1.0 && p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "admissibility needs 0 < s < 1 and p ≥ 1, got s = {s}, p = {p}"
        )));
    }
    Ok(short_range_moment(kernel, eps, 1.0, s * p, cfg)? + tail_mass(kernel, eps, 1.0, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub epsilon: f64,
    pub radius: f64,
    pub tail_mass: f64,
    pub short_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusLimits {
    pub radius: f64,
    pub tail_mass: Extrapolation,
    pub short_range: Extrapolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilitySeries {
    pub s: f64,
    pub p: f64,
    /// (ε, value); `None` where the integral diverges.
    pub values: Vec<(f64, Option<f64>)>,
    pub limit: Option<Extrapolation>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub kernel: String,
    pub q: f64,
    /// Sorted by ε descending, then R ascending.
    pub rows: Vec<MomentRow>,
    pub extrapolated: Vec<RadiusLimits>,
    pub admissibility: Option<AdmissibilitySeries>,
}

impl MomentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                r.epsilon, r.radius, r.tail_mass, r.short_range
            );
        }
        out
    }
}

fn check_radii(radii: &[f64], min: usize) -> Result<()> {
    if radii.len() < min {
        return Err(Error::InvalidParameter(format!(
            "need at least {min} radii, got {}",
            radii.len()
        )));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter(
            "radii must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// Tail masses and q-moments on the (ε, R) grid, with per-R limits.
///
/// Cells run on the current rayon pool; the first failing cell in canonical
/// order is reported.
pub fn moment_report(
    kernel: &KernelFamily,
    schedule: &EpsilonSchedule,
    radii: &[f64],
    q: f64,
    cfg: &QuadratureConfig,
) -> Result<MomentReport> {
    schedule.check_domain(kernel)?;
    check_radii(radii, 1)?;
    let cells: Vec<(f64, f64)> = schedule
        .values()
        .iter()
        .flat_map(|&e| radii.iter().map(move |&r| (e, r)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(eps, radius)| {
            Ok(MomentRow {
                epsilon: eps,
                radius,
                tail_mass: tail_mass(kernel, eps, radius, cfg)?,
                short_range: short_range_moment(kernel, eps, radius, q, cfg)?,
            })
        })
        .collect::<Vec<Result<MomentRow>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut rows = rows;
    rows.sort_by(|a, b| {
        b.epsilon
            .total_cmp(&a.epsilon)
            .then(a.radius.total_cmp(&b.radius))
    });

    let mut sorted_radii = radii.to_vec();
    sorted_radii.sort_by(f64::total_cmp);
    sorted_radii.dedup();
    let mut extrapolated = Vec::with_capacity(sorted_radii.len());
    if schedule.len() >= 3 {
        for &radius in &sorted_radii {
            let column: Vec<&MomentRow> = rows.iter().filter(|r| r.radius == radius).collect();
            let m: Vec<(f64, f64)> = column.iter().map(|r| (r.epsilon, r.tail_mass)).collect();
            let s: Vec<(f64, f64)> = column.iter().map(|r| (r.epsilon, r.short_range)).collect();
            extrapolated.push(RadiusLimits {
                radius,
                tail_mass: extrapolate_limit(&m)?,
                short_range: extrapolate_limit(&s)?,
            });
        }
    }
    Ok(MomentReport {
        kernel: kernel.name.clone(),
        q,
        rows,
        extrapolated,
        admissibility: None,
    })
}

/// Admissibility integrals along the schedule; divergent points are skipped.
pub fn admissibility_series(
    kernel: &KernelFamily,
    schedule: &EpsilonSchedule,
    s: f64,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<AdmissibilitySeries> {
    schedule.check_domain(kernel)?;
    let results: Vec<Result<f64>> = schedule
        .values()
        .par_iter()
        .map(|&eps| admissibility_integral(kernel, eps, s, p, cfg))
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut warnings = Vec::new();
    for (&eps, r) in schedule.values().iter().zip(results) {
        match r {
            Ok(v) => values.push((eps, Some(v))),
            Err(e) if matches!(e.root(), Error::Divergent(_)) => {
                warnings.push(format!("ε = {eps} skipped: {e}"));
                values.push((eps, None));
            }
            Err(e) => return Err(e),
        }
    }
    let valid: Vec<(f64, f64)> = values
        .iter()
        .filter_map(|&(e, v)| v.map(|v| (e, v)))
        .collect();
    let limit = if valid.len() >= 3 {
        Some(extrapolate_limit(&valid)?)
    } else {
        warnings.push(format!(
            "only {} valid schedule points; at least 3 are needed for a limit",
            valid.len()
        ));
        None
    };
    Ok(AdmissibilitySeries {
        s,
        p,
        values,
        limit,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Uniform,
    Iterated,
    Admissible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    MassEscape,
    Attenuation,
    Admissibility,
}

/// One extrapolated limit compared against its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEvidence {
    pub quantity: Quantity,
    /// `None` for limits taken over R as well (R → ∞).
    pub radius: Option<f64>,
    pub target: f64,
    pub limit: f64,
    pub uncertainty: f64,
    pub passed: bool,
}

impl LimitEvidence {
    fn new(
        quantity: Quantity,
        radius: Option<f64>,
        target: f64,
        x: &Extrapolation,
        tol: f64,
    ) -> Self {
        Self {
            quantity,
            radius,
            target,
            limit: x.limit,
            uncertainty: x.uncertainty,
            passed: (x.limit - target).abs() <= tol && x.uncertainty <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVerdict {
    pub condition: Condition,
    pub holds: bool,
    pub tolerance: f64,
    /// Set for the uniform and iterated conditions.
    pub mass_escape: Option<bool>,
    pub attenuation: Option<bool>,
    pub evidence: Vec<LimitEvidence>,
    pub warnings: Vec<String>,
}

fn all_passed(ev: &[LimitEvidence], quantity: Quantity) -> bool {
    ev.iter()
        .filter(|e| e.quantity == quantity)
        .all(|e| e.passed)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

/// Uniform conditions from an existing report: for every R, M_ε(R) → 1 and S_ε(R) → 0.
pub fn uniform_verdict(report: &MomentReport, tol: f64) -> Result<MomentVerdict> {
    check_tol(tol)?;
    if report.extrapolated.len() < 2 {
        return Err(Error::IncompleteReport(
            "the uniform check needs limits at two or more radii".into(),
        ));
    }
    let mut evidence = Vec::new();
    for l in &report.extrapolated {
        evidence.push(LimitEvidence::new(
            Quantity::MassEscape,
            Some(l.radius),
            1.0,
            &l.tail_mass,
            tol,
        ));
    }
    for l in &report.extrapolated {
        evidence.push(LimitEvidence::new(
            Quantity::Attenuation,
            Some(l.radius),
            0.0,
            &l.short_range,
            tol,
        ));
    }
    let mass = all_passed(&evidence, Quantity::MassEscape);
    let att = all_passed(&evidence, Quantity::Attenuation);
    Ok(MomentVerdict {
        condition: Condition::Uniform,
        holds: mass && att,
        tolerance: tol,
        mass_escape: Some(mass),
        attenuation: Some(att),
        evidence,
        warnings: Vec::new(),
    })
}

pub fn check_uniform(
    kernel: &KernelFamily,
    schedule: &EpsilonSchedule,
    radii: &[f64],
    q: f64,
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<MomentVerdict> {
    if schedule.len() < 3 {
        return Err(Error::Arity(schedule.len()));
    }
    check_radii(radii, 2)?;
    uniform_verdict(&moment_report(kernel, schedule, radii, q, cfg)?, tol)
}

/// Iterated conditions from an existing report with increasing radii.
///
/// Mass escape extrapolates the per-R limits once more in 1/R → 0.
/// Attenuation needs every per-R limit at 0: S is monotone in R, so this is
/// the same as the R → ∞ limit vanishing.
pub fn iterated_verdict(report: &MomentReport, tol: f64) -> Result<MomentVerdict> {
    check_tol(tol)?;
    let limits = &report.extrapolated;
    if limits.len() < 3 {
        return Err(Error::IncompleteReport(
            "the iterated check needs limits at three or more radii".into(),
        ));
    }
    let samples: Vec<(f64, f64)> = limits
        .iter()
        .map(|l| (1.0 / l.radius, l.tail_mass.limit))
        .collect();
    let mut outer = extrapolate_limit(&samples)?;
    let widest = limits
        .iter()
        .map(|l| l.tail_mass.uncertainty)
        .fold(0.0, f64::max);
    outer.uncertainty = outer.uncertainty.max(widest);
    let mut evidence = vec![LimitEvidence::new(
        Quantity::MassEscape,
        None,
        1.0,
        &outer,
        tol,
    )];
    for l in limits {
        evidence.push(LimitEvidence::new(
            Quantity::Attenuation,
            Some(l.radius),
            0.0,
            &l.short_range,
            tol,
        ));
    }
    let mass = all_passed(&evidence, Quantity::MassEscape);
    let att = all_passed(&evidence, Quantity::Attenuation);
    Ok(MomentVerdict {
        condition: Condition::Iterated,
        holds: mass && att,
        tolerance: tol,
        mass_escape: Some(mass),
        attenuation: Some(att),
        evidence,
        warnings: Vec::new(),
    })
}

pub fn check_iterated(
    kernel: &KernelFamily,
    schedule: &EpsilonSchedule,
    radii: &[f64],
    q: f64,
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<MomentVerdict> {
    if schedule.len() < 3 {
        return Err(Error::Arity(schedule.len()));
    }
    check_radii(radii, 3)?;
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "radii must be strictly increasing".into(),
        ));
    }
    iterated_verdict(&moment_report(kernel, schedule, radii, q, cfg)?, tol)
}

pub fn admissible_verdict(series: &AdmissibilitySeries, tol: f64) -> Result<MomentVerdict> {
    check_tol(tol)?;
    let evidence: Vec<LimitEvidence> = series
        .limit
        .iter()
        .map(|x| LimitEvidence::new(Quantity::Admissibility, None, 1.0, x, tol))
        .collect();
    Ok(MomentVerdict {
        condition: Condition::Admissible,
        holds: !evidence.is_empty() && evidence.iter().all(|e| e.passed),
        tolerance: tol,
        mass_escape: None,
        attenuation: None,
        evidence,
        warnings: series.warnings.clone(),
    })
}

pub fn check_admissible(
    kernel: &KernelFamily,
    schedule: &EpsilonSchedule,
    s: f64,
    p: f64,
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<MomentVerdict> {
    admissible_verdict(&admissibility_series(kernel, schedule, s, p, cfg)?, tol)
}

#[cfg(test)]
mod tests;
