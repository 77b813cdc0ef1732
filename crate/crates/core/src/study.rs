//! Full experiments: moment verdicts for one kernel family plus ε-sweeps of
//! the energy split for a list of test functions, cross-checked against each
//! other.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_split_with, EnergyBreakdown, ModulusMemo};
use crate::error::{Error, Result};
use crate::functions::{FunctionSpec, Regularity, TestFunction};
use crate::kernel::{EpsilonSchedule, KernelFamily, KernelSpec};
use crate::moments::{
    admissibility_series, admissible_verdict, iterated_verdict, moment_report, uniform_verdict,
    MomentReport, MomentVerdict, DEFAULT_RADII, DEFAULT_TOL,
};
use crate::quadrature::{extrapolate_limit, Extrapolation, QuadratureConfig};

fn default_dimension() -> usize {
    1
}

fn default_p() -> f64 {
    2.0
}

fn default_radii() -> Vec<f64> {
    DEFAULT_RADII.to_vec()
}

fn default_split_radii() -> Vec<f64> {
    vec![0.5, 1.0]
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub schedule: EpsilonSchedule,
    /// Radii for the moment verdicts.
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Radii R at which the energy is split into far and near parts.
    #[serde(default = "default_split_radii")]
    pub split_radii: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_tol")]
    pub agreement_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dimension: default_dimension(),
            p: default_p(),
            s: None,
            schedule: EpsilonSchedule::default(),
            radii: default_radii(),
            split_radii: default_split_radii(),
            tol: DEFAULT_TOL,
            agreement_tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Structured report; CSV tables are written next to it.
    #[serde(default)]
    pub json: Option<PathBuf>,
    /// Moment table, header `epsilon,R,tail_mass,short_range_moment`.
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub kernel: KernelSpec,
    pub functions: Vec<FunctionSpec>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks shared by every subcommand: exponents, radii, tolerances and
    /// quadrature settings.
    pub fn validate_sweep(&self) -> Result<()> {
        let sw = &self.sweep;
        if !(sw.p >= 1.0 && sw.p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "p must be ≥ 1, got {}",
                sw.p
            )));
        }
        if let Some(s) = sw.s {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "s must lie in (0, 1), got {s}"
                )));
            }
        }
        if sw.dimension == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        for (what, radii) in [("radii", &sw.radii), ("split_radii", &sw.split_radii)] {
            if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "{what} must be a non-empty list of positive radii"
                )));
            }
        }
        if !(sw.tol > 0.0 && sw.agreement_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        self.quadrature.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_sweep()?;
        if self.functions.is_empty() {
            return Err(Error::InvalidParameter(
                "a study needs at least one function".into(),
            ));
        }
        if self.sweep.schedule.len() < 3 {
            return Err(Error::InvalidParameter(
                "a study needs at least 3 schedule points".into(),
            ));
        }
        Ok(())
    }

    /// Moment order for the uniform and iterated checks: sp in the fractional
    /// setting, p otherwise.
    pub fn moment_order(&self) -> f64 {
        self.sweep.s.map_or(self.sweep.p, |s| s * self.sweep.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearLimit {
    pub radius: f64,
    pub limit: Extrapolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionStudy {
    pub spec: FunctionSpec,
    /// Sorted by ε descending, then R ascending.
    pub rows: Vec<EnergyBreakdown>,
    pub ms_ratio_limit: Option<Extrapolation>,
    pub near_limits: Vec<NearLimit>,
    /// |ms_ratio − 1| non-increasing along the schedule, within the limit's
    /// uncertainty. Only for the fractional kernel and compactly supported u.
    pub monotone_approach: Option<bool>,
}

impl FunctionStudy {
    /// Ratio limit within `tol` of 1 and every near-field limit within `tol` of 0.
    pub fn ms_formula_holds(&self, tol: f64) -> Option<bool> {
        let ratio = self.ms_ratio_limit.as_ref()?;
        if self.near_limits.is_empty() {
            return None;
        }
        let ratio_ok = (ratio.limit - 1.0).abs() <= tol && ratio.uncertainty <= tol;
        let near_ok = self
            .near_limits
            .iter()
            .all(|n| n.limit.limit.abs() <= tol && n.limit.uncertainty <= tol);
        Some(ratio_ok && near_ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub spec: FunctionSpec,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub spec: FunctionSpec,
    pub uniform: bool,
    pub iterated: bool,
    pub ms_formula: bool,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSummary {
    pub tolerance: f64,
    pub per_function: Vec<Agreement>,
    /// Mass escape and attenuation agree; recorded only for admissible families.
    pub sub_verdicts_agree: Option<bool>,
    pub all_agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: StudyConfig,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that varies between runs.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub kernel: String,
    pub dimension: usize,
    pub p: f64,
    pub s: Option<f64>,
    pub q: f64,
    pub moments: Option<MomentReport>,
    pub uniform: Option<MomentVerdict>,
    pub iterated: Option<MomentVerdict>,
    pub admissible: Option<MomentVerdict>,
    pub functions: Vec<FunctionStudy>,
    pub skipped: Vec<Skipped>,
    pub failures: Vec<CellFailure>,
    pub equivalence: EquivalenceSummary,
    pub provenance: Provenance,
}

impl StudyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Why a function cannot enter the study, if it cannot.
fn incompatibility(
    u: &TestFunction,
    kernel: &KernelFamily,
    p: f64,
    s: Option<f64>,
) -> Option<String> {
    if let Regularity::Wsp { max_sp } = u.regularity {
        return match s {
            None => Some(format!(
                "`{}` has no gradient in Lᵖ; the W^{{1,p}} setting does not cover it",
                u.name
            )),
            Some(s) if s * p >= max_sp => Some(format!(
                "`{}` lies in W^{{s,p}} only for sp < {max_sp}, got sp = {}",
                u.name,
                s * p
            )),
            _ => None,
        };
    }
    if u.dimension > 1 && kernel.is_drifting() && !u.modulus_is_radial() {
        return Some(format!(
            "drifting kernel `{}` needs a radial translation modulus for `{}` in N = {}",
            kernel.name, u.name, u.dimension
        ));
    }
    None
}

fn verdict_or_failure(
    v: Result<MomentVerdict>,
    what: &str,
    failures: &mut Vec<CellFailure>,
) -> Option<MomentVerdict> {
    match v {
        Ok(v) => Some(v),
        Err(e) => {
            failures.push(CellFailure {
                cell: what.into(),
                error: e.to_string(),
            });
            None
        }
    }
}

fn sweep_function(
    spec: &FunctionSpec,
    u: &TestFunction,
    kernel: &KernelFamily,
    cfg: &StudyConfig,
    failures: &mut Vec<CellFailure>,
) -> Option<FunctionStudy> {
    let sw = &cfg.sweep;
    let memo = match ModulusMemo::new(u, sw.p, &cfg.quadrature) {
        Ok(m) => m,
        Err(e) => {
            failures.push(CellFailure {
                cell: format!("u = `{}`", u.name),
                error: e.to_string(),
            });
            return None;
        }
    };
    let mut split_radii = sw.split_radii.clone();
    split_radii.sort_by(f64::total_cmp);
    split_radii.dedup();
    let cells: Vec<(f64, f64)> = sw
        .schedule
        .values()
        .iter()
        .flat_map(|&e| split_radii.iter().map(move |&r| (e, r)))
        .collect();
    let results: Vec<Result<EnergyBreakdown>> = cells
        .par_iter()
        .map(|&(eps, r)| energy_split_with(kernel, eps, r, &memo, &cfg.quadrature))
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(b) => rows.push(b),
            Err(e) => failures.push(CellFailure {
                cell: match &e {
                    Error::Cell { context, .. } => context.clone(),
                    _ => format!("kernel `{}`, u = `{}`", kernel.name, u.name),
                },
                error: e.root().to_string(),
            }),
        }
    }
    if rows.is_empty() {
        return None;
    }

    let first_r = split_radii[0];
    let ratios: Vec<(f64, f64)> = rows
        .iter()
        .filter(|b| b.split_radius == first_r)
        .filter_map(|b| b.ms_ratio.map(|m| (b.epsilon, m)))
        .collect();
    let ms_ratio_limit = extrapolate_limit(&ratios).ok();
    let near_limits = split_radii
        .iter()
        .filter_map(|&r| {
            let near: Vec<(f64, f64)> = rows
                .iter()
                .filter(|b| b.split_radius == r)
                .map(|b| (b.epsilon, b.near))
                .collect();
            extrapolate_limit(&near)
                .ok()
                .map(|limit| NearLimit { radius: r, limit })
        })
        .collect();
    let monotone_approach = match (&kernel.kind, u.support_radius(), &ms_ratio_limit) {
        (crate::kernel::KernelKind::Fractional { .. }, Some(_), Some(x)) => Some(
            ratios
                .windows(2)
                .all(|w| (w[1].1 - 1.0).abs() <= (w[0].1 - 1.0).abs() + x.uncertainty),
        ),
        _ => None,
    };
    Some(FunctionStudy {
        spec: spec.clone(),
        rows,
        ms_ratio_limit,
        near_limits,
        monotone_approach,
    })
}

/// The ε-sweeps of a study without the moment verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyStudy {
    pub kernel: String,
    pub functions: Vec<FunctionStudy>,
    pub skipped: Vec<Skipped>,
    pub failures: Vec<CellFailure>,
}

/// Energy splits of every configured function over the schedule and split radii.
pub fn energy_study(config: &StudyConfig) -> Result<EnergyStudy> {
    let sw = &config.sweep;
    let kernel = config.kernel.build(sw.dimension, sw.p, sw.s)?;
    sw.schedule.check_domain(&kernel)?;
    let mut out = EnergyStudy {
        kernel: kernel.name.clone(),
        functions: Vec::new(),
        skipped: Vec::new(),
        failures: Vec::new(),
    };
    for spec in &config.functions {
        let u = match spec.build(sw.dimension) {
            Ok(u) => u,
            Err(e) => {
                out.skipped.push(Skipped {
                    spec: spec.clone(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if let Some(reason) = incompatibility(&u, &kernel, sw.p, sw.s) {
            out.skipped.push(Skipped {
                spec: spec.clone(),
                reason,
            });
            continue;
        }
        if let Some(f) = sweep_function(spec, &u, &kernel, config, &mut out.failures) {
            out.functions.push(f);
        }
    }
    Ok(out)
}

fn summarize(report: &StudyReport, tol: f64) -> EquivalenceSummary {
    let (uniform, iterated) = match (&report.uniform, &report.iterated) {
        (Some(u), Some(i)) => (Some(u.holds), Some(i.holds)),
        _ => (None, None),
    };
    let mut per_function = Vec::new();
    if let (Some(uniform), Some(iterated)) = (uniform, iterated) {
        for f in &report.functions {
            if let Some(ms) = f.ms_formula_holds(tol) {
                per_function.push(Agreement {
                    spec: f.spec.clone(),
                    uniform,
                    iterated,
                    ms_formula: ms,
                    agree: uniform == iterated && iterated == ms,
                });
            }
        }
    }
    let sub_verdicts_agree = match (&report.admissible, &report.uniform) {
        (Some(a), Some(u)) if a.holds => Some(u.mass_escape == u.attenuation),
        _ => None,
    };
    let all_agree = !per_function.is_empty()
        && per_function.iter().all(|a| a.agree)
        && sub_verdicts_agree != Some(false);
    EquivalenceSummary {
        tolerance: tol,
        per_function,
        sub_verdicts_agree,
        all_agree,
    }
}

/// Runs every check of the study on the current rayon pool.
///
/// Failing cells are recorded in the report; the study itself fails only
/// when nothing completes.
pub fn run_ms_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let sw = &config.sweep;
    let qcfg = &config.quadrature;
    let kernel = config.kernel.build(sw.dimension, sw.p, sw.s)?;
    sw.schedule.check_domain(&kernel)?;
    let q = config.moment_order();
    let mut failures = Vec::new();

    let mut radii = sw.radii.clone();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let moments = match moment_report(&kernel, &sw.schedule, &radii, q, qcfg) {
        Ok(m) => Some(m),
        Err(e) => {
            failures.push(CellFailure {
                cell: format!("moments of kernel `{}` with q = {q}", kernel.name),
                error: e.to_string(),
            });
            None
        }
    };
    let (uniform, iterated) = match &moments {
        Some(m) => (
            verdict_or_failure(uniform_verdict(m, sw.tol), "uniform verdict", &mut failures),
            verdict_or_failure(
                iterated_verdict(m, sw.tol),
                "iterated verdict",
                &mut failures,
            ),
        ),
        None => (None, None),
    };
    let admissible = sw.s.and_then(|s| {
        verdict_or_failure(
            admissibility_series(&kernel, &sw.schedule, s, sw.p, qcfg)
                .and_then(|series| admissible_verdict(&series, sw.tol)),
            "admissibility verdict",
            &mut failures,
        )
    });

    let EnergyStudy {
        functions,
        skipped,
        failures: sweep_failures,
        ..
    } = energy_study(config)?;
    failures.extend(sweep_failures);

    if moments.is_none() && functions.is_empty() {
        let detail = failures
            .iter()
            .map(|f| format!("{}: {}", f.cell, f.error))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::NonConvergence(format!(
            "no study cell completed ({detail})"
        )));
    }

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut report = StudyReport {
        kernel: kernel.name.clone(),
        dimension: sw.dimension,
        p: sw.p,
        s: sw.s,
        q,
        moments,
        uniform,
        iterated,
        admissible,
        functions,
        skipped,
        failures,
        equivalence: EquivalenceSummary {
            tolerance: sw.agreement_tol,
            per_function: Vec::new(),
            sub_verdicts_agree: None,
            all_agree: false,
        },
        provenance: Provenance {
            config: config.clone(),
            seed: qcfg.rng_seed,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
        },
    };
    report.equivalence = summarize(&report, sw.agreement_tol);
    Ok(report)
}

/// True iff the recorded verdicts and MS outcomes coincide for every
/// compatible function, and (for admissible families) mass escape agrees
/// with attenuation.
pub fn verify_equivalence(report: &StudyReport, tol: f64) -> Result<bool> {
    if report.uniform.is_none() || report.iterated.is_none() {
        return Err(Error::IncompleteReport(
            "uniform or iterated verdict missing".into(),
        ));
    }
    let summary = summarize(report, tol);
    if summary.per_function.is_empty() {
        return Err(Error::IncompleteReport(
            "no function has both a ratio limit and near-field limits".into(),
        ));
    }
    Ok(summary.all_agree)
}
