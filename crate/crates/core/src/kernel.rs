//! ε-parameterized kernel families ρ_ε on ℝᴺ.
//!
//! Every built-in family is radial about a (possibly ε-dependent) centre, so a
//! family is described by its radial profile plus the analytic metadata the
//! integrators use: singularity and decay exponents, breakpoints, support
//! radius, and closed-form moments where they exist.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{
    integrate_radial, integrate_radial_with, shell_average, IntegralResult, QuadratureConfig,
    RadialDomain,
};
use crate::special::sphere_area;

/// exp(−1/(1−r²)) on r < 1, zero elsewhere (not normalized).
pub fn mollifier(r: f64) -> f64 {
    let r2 = r * r;
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// |𝕊^{N−1}| ∫₀¹ r^{N−1+q} shape(r) dr for a shape supported in the unit ball.
pub fn shape_moment(shape: fn(f64) -> f64, dimension: usize, q: f64) -> Result<f64> {
    let cfg = QuadratureConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-300,
        ..QuadratureConfig::default()
    };
    let k = dimension as f64 - 1.0 + q;
    let r = integrate_radial(|r| r.powf(k) * shape(r), 0.0, 1.0, true, None, &cfg)?
        .require_converged(|| {
            format!("moment of order {q} of the bump shape in N = {dimension}")
        })?;
    Ok(sphere_area(dimension) * r.value)
}

/// Centre offset a_ε = scale·ε^(−power) along e₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drift {
    pub scale: f64,
    pub power: f64,
}

impl Drift {
    /// a_ε = 1/ε.
    pub fn inverse() -> Self {
        Self {
            scale: 1.0,
            power: 1.0,
        }
    }

    /// Fixed offset, independent of ε.
    pub fn constant(offset: f64) -> Self {
        Self {
            scale: offset,
            power: 0.0,
        }
    }

    pub fn at(&self, eps: f64) -> f64 {
        self.scale * eps.powf(-self.power)
    }
}

/// One row of a piecewise power table: ρ(r) = coeff·ε^eps_power·r^(exponent + eps_exponent·ε)
/// for `from` ≤ r < next row's `from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerPiece {
    pub from: f64,
    pub coeff: f64,
    #[serde(default)]
    pub eps_power: f64,
    #[serde(default)]
    pub exponent: f64,
    #[serde(default)]
    pub eps_exponent: f64,
}

impl PowerPiece {
    fn value(&self, eps: f64, r: f64) -> f64 {
        self.coeff * eps.powf(self.eps_power) * r.powf(self.exponent + self.eps_exponent * eps)
    }

    fn power(&self, eps: f64) -> f64 {
        self.exponent + self.eps_exponent * eps
    }
}

#[derive(Clone)]
pub enum KernelKind {
    /// (εp/|𝕊^{N−1}|)|z|^(−N−εp).
    Fractional {
        p: f64,
    },
    /// Fractional outside B₁, (ε²p²/|𝕊^{N−1}|) ln(1/|z|) |z|^(−N−εp) inside.
    LogCorrected {
        p: f64,
    },
    /// Fractional outside B₁, the constant ε inside.
    CappedFractional {
        p: f64,
    },
    /// norm·shape(|z − a_ε e₁|) with shape supported in the unit ball.
    ShiftedBump {
        shape: fn(f64) -> f64,
        norm: f64,
        drift: Drift,
    },
    /// Standard Gaussian centred at e₁/ε.
    ShiftedGaussian,
    /// ε^(−N−sp) φ(z/ε) with φ a mollifier scaled so that ∫|w|^{sp}φ = 1.
    Concentrating {
        s: f64,
        p: f64,
        norm: f64,
    },
    Zero,
    CustomRadial {
        pieces: Vec<PowerPiece>,
    },
}

impl fmt::Debug for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fractional { p } => write!(f, "Fractional {{ p: {p} }}"),
            Self::LogCorrected { p } => write!(f, "LogCorrected {{ p: {p} }}"),
            Self::CappedFractional { p } => write!(f, "CappedFractional {{ p: {p} }}"),
            Self::ShiftedBump { norm, drift, .. } => {
                write!(f, "ShiftedBump {{ norm: {norm}, drift: {drift:?} }}")
            }
            Self::ShiftedGaussian => write!(f, "ShiftedGaussian"),
            Self::Concentrating { s, p, norm } => {
                write!(f, "Concentrating {{ s: {s}, p: {p}, norm: {norm} }}")
            }
            Self::Zero => write!(f, "Zero"),
            Self::CustomRadial { pieces } => write!(f, "CustomRadial {{ pieces: {pieces:?} }}"),
        }
    }
}

/// Radius beyond which the Gaussian profile is treated as zero; e^(−800) underflows.
const GAUSSIAN_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone)]
pub struct KernelFamily {
    pub name: String,
    pub dimension: usize,
    pub kind: KernelKind,
    /// Open interval of admissible ε.
    pub epsilon_domain: (f64, f64),
}

fn check_np(dimension: usize, p: f64) -> Result<()> {
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be ≥ 1, got {p}")));
    }
    Ok(())
}

pub fn make_fractional(dimension: usize, p: f64) -> Result<KernelFamily> {
    check_np(dimension, p)?;
    Ok(KernelFamily {
        name: "fractional".into(),
        dimension,
        kind: KernelKind::Fractional { p },
        epsilon_domain: (0.0, 1.0),
    })
}

pub fn make_log_corrected(dimension: usize, p: f64) -> Result<KernelFamily> {
    check_np(dimension, p)?;
    Ok(KernelFamily {
        name: "log-corrected".into(),
        dimension,
        kind: KernelKind::LogCorrected { p },
        epsilon_domain: (0.0, 1.0),
    })
}

pub fn make_capped_fractional(dimension: usize, p: f64) -> Result<KernelFamily> {
    check_np(dimension, p)?;
    Ok(KernelFamily {
        name: "capped-fractional".into(),
        dimension,
        kind: KernelKind::CappedFractional { p },
        epsilon_domain: (0.0, 1.0),
    })
}

/// Unit-mass bump `shape`, supported in the unit ball, centred at drift(ε)·e₁.
pub fn make_shifted_bump(
    dimension: usize,
    shape: fn(f64) -> f64,
    drift: Drift,
) -> Result<KernelFamily> {
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    if !(drift.scale > 0.0 && drift.power >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "drift needs scale > 0 and power ≥ 0, got {drift:?}"
        )));
    }
    let mass = shape_moment(shape, dimension, 0.0)?;
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter("bump shape has no mass".into()));
    }
    Ok(KernelFamily {
        name: "shifted-bump".into(),
        dimension,
        kind: KernelKind::ShiftedBump {
            shape,
            norm: 1.0 / mass,
            drift,
        },
        epsilon_domain: (0.0, f64::INFINITY),
    })
}

pub fn make_shifted_mollifier(dimension: usize, drift: Drift) -> Result<KernelFamily> {
    make_shifted_bump(dimension, mollifier, drift)
}

pub fn make_shifted_gaussian(dimension: usize) -> Result<KernelFamily> {
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    Ok(KernelFamily {
        name: "shifted-gaussian".into(),
        dimension,
        kind: KernelKind::ShiftedGaussian,
        epsilon_domain: (0.0, f64::INFINITY),
    })
}

/// ρ_ε(z) = ε^(−N−sp) φ(z/ε), the family that is admissible but loses all mass.
pub fn make_concentrating(dimension: usize, s: f64, p: f64) -> Result<KernelFamily> {
    check_np(dimension, p)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "s must lie in (0, 1), got {s}"
        )));
    }
    let m = shape_moment(mollifier, dimension, s * p)?;
    Ok(KernelFamily {
        name: "concentrating".into(),
        dimension,
        kind: KernelKind::Concentrating {
            s,
            p,
            norm: 1.0 / m,
        },
        epsilon_domain: (0.0, 1.0),
    })
}

pub fn make_zero(dimension: usize) -> Result<KernelFamily> {
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    Ok(KernelFamily {
        name: "zero".into(),
        dimension,
        kind: KernelKind::Zero,
        epsilon_domain: (0.0, f64::INFINITY),
    })
}

/// Piecewise power radial kernel. Rows must start at 0 with strictly increasing `from`.
pub fn make_custom_radial(
    dimension: usize,
    pieces: Vec<PowerPiece>,
    epsilon_domain: (f64, f64),
) -> Result<KernelFamily> {
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    if pieces.first().map(|p| p.from) != Some(0.0) {
        return Err(Error::InvalidParameter(
            "custom-radial table must start at r = 0".into(),
        ));
    }
    if pieces.windows(2).any(|w| !(w[1].from > w[0].from)) {
        return Err(Error::InvalidParameter(
            "custom-radial rows must have strictly increasing `from`".into(),
        ));
    }
    if pieces
        .iter()
        .any(|p| !(p.coeff >= 0.0 && p.from.is_finite()))
    {
        return Err(Error::InvalidParameter(
            "custom-radial coefficients must be non-negative and radii finite".into(),
        ));
    }
    let (lo, hi) = epsilon_domain;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "bad epsilon domain ({lo}, {hi})"
        )));
    }
    Ok(KernelFamily {
        name: "custom-radial".into(),
        dimension,
        kind: KernelKind::CustomRadial { pieces },
        epsilon_domain,
    })
}

/// ∫_a^b r^m dr, with b = ∞ allowed when m < −1.
fn power_integral(m: f64, a: f64, b: f64) -> Result<f64> {
    if b.is_infinite() {
        if m >= -1.0 {
            return Err(Error::Divergent(format!("∫ r^{m} dr to infinity diverges")));
        }
        return Ok(-a.powf(m + 1.0) / (m + 1.0));
    }
    if a == 0.0 && m <= -1.0 {
        return Err(Error::Divergent(format!("∫ r^{m} dr from 0 diverges")));
    }
    if (m + 1.0).abs() < 1e-300 {
        return Ok((b / a).ln());
    }
    Ok((b.powf(m + 1.0) - a.powf(m + 1.0)) / (m + 1.0))
}

impl KernelFamily {
    pub fn check_epsilon(&self, eps: f64) -> Result<()> {
        let (lo, hi) = self.epsilon_domain;
        if eps > lo && eps < hi {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "ε = {eps} lies outside the domain ({lo}, {hi}) of kernel `{}`",
                self.name
            )))
        }
    }

    /// Centre of radial symmetry, when it is not the origin.
    pub fn shift_center(&self, eps: f64) -> Option<Vec<f64>> {
        let offset = match &self.kind {
            KernelKind::ShiftedBump { drift, .. } => drift.at(eps),
            KernelKind::ShiftedGaussian => 1.0 / eps,
            _ => return None,
        };
        let mut c = vec![0.0; self.dimension];
        c[0] = offset;
        Some(c)
    }

    /// True for families whose centre moves with ε.
    pub fn is_drifting(&self) -> bool {
        matches!(
            self.kind,
            KernelKind::ShiftedBump { .. } | KernelKind::ShiftedGaussian
        )
    }

    /// |shift_center(ε)|, zero for centred families.
    pub fn shift_distance(&self, eps: f64) -> f64 {
        match &self.kind {
            KernelKind::ShiftedBump { drift, .. } => drift.at(eps),
            KernelKind::ShiftedGaussian => 1.0 / eps,
            _ => 0.0,
        }
    }

    /// ρ_ε as a function of the distance to the centre.
    pub fn radial_profile(&self, eps: f64, r: f64) -> Option<f64> {
        Some(self.profile(eps, r))
    }

    pub(crate) fn profile(&self, eps: f64, r: f64) -> f64 {
        let n = self.dimension as f64;
        match &self.kind {
            KernelKind::Fractional { p } => {
                eps * p / sphere_area(self.dimension) * r.powf(-n - eps * p)
            }
            KernelKind::LogCorrected { p } => {
                let b = eps * p;
                if r < 1.0 {
                    b * b / sphere_area(self.dimension) * (1.0 / r).ln() * r.powf(-n - b)
                } else {
                    b / sphere_area(self.dimension) * r.powf(-n - b)
                }
            }
            KernelKind::CappedFractional { p } => {
                if r < 1.0 {
                    eps
                } else {
                    eps * p / sphere_area(self.dimension) * r.powf(-n - eps * p)
                }
            }
            KernelKind::ShiftedBump { shape, norm, .. } => norm * shape(r),
            KernelKind::ShiftedGaussian => {
                (2.0 * std::f64::consts::PI).powf(-0.5 * n) * (-0.5 * r * r).exp()
            }
            KernelKind::Concentrating { s, p, norm } => {
                eps.powf(-n - s * p) * norm * mollifier(r / eps)
            }
            KernelKind::Zero => 0.0,
            KernelKind::CustomRadial { pieces } => {
                let idx = pieces.partition_point(|pc| pc.from <= r).saturating_sub(1);
                pieces[idx].value(eps, r)
            }
        }
    }

    /// ρ_ε(z). Returns +∞ at the singular point of singular families.
    pub fn eval(&self, eps: f64, z: &[f64]) -> f64 {
        let c = self.shift_distance(eps);
        let r2: f64 = z
            .iter()
            .enumerate()
            .map(|(i, zi)| {
                let d = if i == 0 { zi - c } else { *zi };
                d * d
            })
            .sum();
        self.profile(eps, r2.sqrt())
    }

    /// β(ε) with ρ_ε(r) ~ r^(−N−β) as r → 0, for families singular at the origin.
    pub fn singularity_exponent(&self, eps: f64) -> Option<f64> {
        match &self.kind {
            KernelKind::Fractional { p } | KernelKind::LogCorrected { p } => Some(eps * p),
            KernelKind::CustomRadial { pieces } => {
                let beta = -(self.dimension as f64) - pieces[0].power(eps);
                (beta > -(self.dimension as f64) && pieces[0].coeff > 0.0).then_some(beta)
            }
            _ => None,
        }
    }

    /// κ with ρ_ε(r) = O(r^(−N−κ)) as r → ∞; `None` for compactly supported or
    /// super-polynomially decaying profiles.
    pub fn tail_exponent(&self, eps: f64) -> Option<f64> {
        match &self.kind {
            KernelKind::Fractional { p }
            | KernelKind::LogCorrected { p }
            | KernelKind::CappedFractional { p } => Some(eps * p),
            KernelKind::CustomRadial { pieces } => {
                let last = pieces.last().expect("validated non-empty");
                (last.coeff > 0.0).then(|| -(self.dimension as f64) - last.power(eps))
            }
            _ => None,
        }
    }

    /// Radius about the centre outside which the profile vanishes.
    pub fn profile_support(&self, eps: f64) -> Option<f64> {
        match &self.kind {
            KernelKind::ShiftedBump { .. } => Some(1.0),
            KernelKind::ShiftedGaussian => Some(GAUSSIAN_CUTOFF),
            KernelKind::Concentrating { .. } => Some(eps),
            KernelKind::Zero => Some(0.0),
            KernelKind::CustomRadial { pieces } => {
                let last = pieces.last().expect("validated non-empty");
                (last.coeff == 0.0).then_some(last.from)
            }
            _ => None,
        }
    }

    /// Radii (about the centre) where the profile is not smooth.
    pub fn radial_breakpoints(&self, eps: f64) -> Vec<f64> {
        match &self.kind {
            KernelKind::LogCorrected { .. } | KernelKind::CappedFractional { .. } => vec![1.0],
            KernelKind::ShiftedBump { .. } => vec![1.0],
            KernelKind::ShiftedGaussian => vec![1.0, 2.0, 4.0, 8.0, 16.0],
            KernelKind::Concentrating { .. } => vec![eps],
            KernelKind::CustomRadial { pieces } => pieces.iter().skip(1).map(|p| p.from).collect(),
            _ => Vec::new(),
        }
    }

    /// True when ∫ρ_ε = 1 for every ε.
    pub fn is_normalized(&self) -> bool {
        matches!(
            self.kind,
            KernelKind::ShiftedBump { .. } | KernelKind::ShiftedGaussian
        )
    }

    /// ∫_{|z|>R} ρ_ε in closed form, when the family has one.
    pub fn closed_form_tail_mass(&self, eps: f64, radius: f64) -> Option<Result<f64>> {
        if !(radius > 0.0) {
            return Some(Err(Error::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            ))));
        }
        let n = self.dimension as f64;
        let area = sphere_area(self.dimension);
        let value = match &self.kind {
            KernelKind::Fractional { p } => radius.powf(-eps * p),
            KernelKind::LogCorrected { p } => {
                let b = eps * p;
                if radius >= 1.0 {
                    radius.powf(-b)
                } else {
                    2.0 + radius.powf(-b) * (b * (1.0 / radius).ln() - 1.0)
                }
            }
            KernelKind::CappedFractional { p } => {
                if radius >= 1.0 {
                    radius.powf(-eps * p)
                } else {
                    1.0 + eps * area * (1.0 - radius.powf(n)) / n
                }
            }
            KernelKind::Zero => 0.0,
            KernelKind::CustomRadial { pieces } => {
                return Some(self.custom_integral(pieces, eps, radius, f64::INFINITY, 0.0));
            }
            _ => return None,
        };
        Some(Ok(value))
    }

    /// ∫_{|z|<R} |z|^q ρ_ε in closed form, when the family has one.
    pub fn closed_form_moment(&self, eps: f64, radius: f64, q: f64) -> Option<Result<f64>> {
        if !(radius > 0.0) {
            return Some(Err(Error::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            ))));
        }
        let n = self.dimension as f64;
        let area = sphere_area(self.dimension);
        let divergent = |b: f64| {
            Err(Error::Divergent(format!(
                "moment of order q = {q} diverges at the origin for singularity exponent {b}"
            )))
        };
        let value = match &self.kind {
            KernelKind::Fractional { p } => {
                let b = eps * p;
                if q <= b {
                    return Some(divergent(b));
                }
                b * radius.powf(q - b) / (q - b)
            }
            KernelKind::LogCorrected { p } => {
                let b = eps * p;
                if q <= b {
                    return Some(divergent(b));
                }
                let a = q - b;
                if radius <= 1.0 {
                    b * b * radius.powf(a) * ((1.0 / radius).ln() / a + 1.0 / (a * a))
                } else {
                    b * b / (a * a) + b * (radius.powf(a) - 1.0) / a
                }
            }
            KernelKind::CappedFractional { p } => {
                if q <= -n {
                    return Some(divergent(0.0));
                }
                if radius <= 1.0 {
                    eps * area * radius.powf(n + q) / (n + q)
                } else {
                    let a = q - eps * p;
                    let outer = if a.abs() < 1e-300 {
                        eps * p * radius.ln()
                    } else {
                        eps * p * (radius.powf(a) - 1.0) / a
                    };
                    eps * area / (n + q) + outer
                }
            }
            KernelKind::Zero => 0.0,
            KernelKind::CustomRadial { pieces } => {
                return Some(self.custom_integral(pieces, eps, 0.0, radius, q));
            }
            _ => return None,
        };
        Some(Ok(value))
    }

    /// ∫_{lo < |z| < hi} w(|z|) ρ_ε(z) dz by radial quadrature about the centre.
    ///
    /// `w_breaks` are values of |z| where `w` is not smooth. For drifting
    /// families each shell about the centre is reduced with
    /// [`shell_average`]. When `hi` is infinite, `w` must stay bounded.
    pub fn radial_integral<F>(
        &self,
        eps: f64,
        lo: f64,
        hi: f64,
        mut w: F,
        w_breaks: &[f64],
        cfg: &QuadratureConfig,
    ) -> Result<IntegralResult>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::InvalidParameter(format!(
                "radial window ({lo}, {hi}) is malformed"
            )));
        }
        let n = self.dimension;
        let area = sphere_area(n);
        let k = n as i32 - 1;
        let support = self.profile_support(eps).unwrap_or(f64::INFINITY);
        let a = self.shift_distance(eps);
        if support == 0.0 {
            return Ok(IntegralResult::zero());
        }
        let mut breaks = self.radial_breakpoints(eps);

        if a == 0.0 {
            let upper = hi.min(support);
            if upper <= lo {
                return Ok(IntegralResult::zero());
            }
            breaks.extend_from_slice(w_breaks);
            let domain = RadialDomain::new(lo, upper)
                .singular(lo == 0.0 && self.singularity_exponent(eps).is_some())
                .decay(if upper.is_infinite() {
                    self.tail_exponent(eps)
                } else {
                    None
                })
                .breaks(breaks);
            return integrate_radial_with(
                |r| Ok(area * r.powi(k) * w(r)? * self.profile(eps, r)),
                &domain,
                cfg,
            );
        }

        if a + support <= lo || (a - support).max(0.0) >= hi {
            return Ok(IntegralResult::zero());
        }
        let mut s_breaks: Vec<f64> = w_breaks.to_vec();
        s_breaks.push(lo);
        if hi.is_finite() {
            s_breaks.push(hi);
        }
        for &b in &s_breaks {
            breaks.push((a - b).abs());
            breaks.push(a + b);
        }
        let domain = RadialDomain::new(0.0, support).breaks(breaks);
        let mut windowed = |s: f64| {
            if s > lo && s < hi {
                w(s)
            } else {
                Ok(0.0)
            }
        };
        integrate_radial_with(
            |t| {
                let rho = self.profile(eps, t);
                if rho == 0.0 {
                    return Ok(0.0);
                }
                let avg = shell_average(&mut windowed, a, t, n, &s_breaks, cfg)?;
                Ok(area * t.powi(k) * rho * avg)
            },
            &domain,
            cfg,
        )
    }

    /// |𝕊^{N−1}| ∫_a^b r^(N−1+q) ρ_ε(r) dr for the piecewise power table.
    fn custom_integral(
        &self,
        pieces: &[PowerPiece],
        eps: f64,
        a: f64,
        b: f64,
        q: f64,
    ) -> Result<f64> {
        let n = self.dimension as f64;
        let mut total = 0.0;
        for (i, pc) in pieces.iter().enumerate() {
            let lo = pc.from.max(a);
            let hi = pieces.get(i + 1).map_or(f64::INFINITY, |nx| nx.from).min(b);
            if !(hi > lo) || pc.coeff == 0.0 {
                continue;
            }
            let m = n - 1.0 + q + pc.power(eps);
            total += pc.coeff * eps.powf(pc.eps_power) * power_integral(m, lo, hi)?;
        }
        Ok(sphere_area(self.dimension) * total)
    }
}

/// Strictly decreasing sequence of ε values discretizing the limit ε → 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsilonSchedule {
    values: Vec<f64>,
}

impl EpsilonSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty ε schedule".into()));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(
                "ε values must be positive and finite".into(),
            ));
        }
        if values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParameter(
                "ε schedule must be strictly decreasing".into(),
            ));
        }
        Ok(Self { values })
    }

    /// ε_k = start·ratio^k, k = 0..count.
    pub fn geometric(start: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio must lie in (0, 1), got {ratio}"
            )));
        }
        Self::new((0..count).map(|k| start * ratio.powi(k as i32)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_domain(&self, kernel: &KernelFamily) -> Result<()> {
        self.values
            .iter()
            .try_for_each(|&e| kernel.check_epsilon(e))
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self::geometric(0.1, 0.5, 12).expect("default schedule is valid")
    }
}

impl TryFrom<Vec<f64>> for EpsilonSchedule {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EpsilonSchedule> for Vec<f64> {
    fn from(s: EpsilonSchedule) -> Self {
        s.values
    }
}

/// Kernel selection by name, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Fractional,
    LogCorrected,
    CappedFractional,
    ShiftedBump {
        #[serde(default = "one")]
        drift_scale: f64,
        #[serde(default = "one")]
        drift_power: f64,
    },
    ShiftedGaussian,
    Concentrating,
    Zero,
    CustomRadial {
        pieces: Vec<PowerPiece>,
        #[serde(default = "unit_interval")]
        epsilon_domain: (f64, f64),
    },
}

fn one() -> f64 {
    1.0
}

fn unit_interval() -> (f64, f64) {
    (0.0, 1.0)
}

impl KernelSpec {
    pub fn parse_name(name: &str) -> Result<Self> {
        Ok(match name {
            "fractional" => Self::Fractional,
            "log-corrected" => Self::LogCorrected,
            "capped-fractional" => Self::CappedFractional,
            "shifted-bump" => Self::ShiftedBump {
                drift_scale: 1.0,
                drift_power: 1.0,
            },
            "shifted-gaussian" => Self::ShiftedGaussian,
            "concentrating" => Self::Concentrating,
            "zero" => Self::Zero,
            _ => {
                return Err(Error::Unknown {
                    kind: "kernel",
                    name: name.into(),
                })
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fractional => "fractional",
            Self::LogCorrected => "log-corrected",
            Self::CappedFractional => "capped-fractional",
            Self::ShiftedBump { .. } => "shifted-bump",
            Self::ShiftedGaussian => "shifted-gaussian",
            Self::Concentrating => "concentrating",
            Self::Zero => "zero",
            Self::CustomRadial { .. } => "custom-radial",
        }
    }

    /// Instantiate in dimension N; `s` is needed only by the concentrating family.
    pub fn build(&self, dimension: usize, p: f64, s: Option<f64>) -> Result<KernelFamily> {
        match self {
            Self::Fractional => make_fractional(dimension, p),
            Self::LogCorrected => make_log_corrected(dimension, p),
            Self::CappedFractional => make_capped_fractional(dimension, p),
            Self::ShiftedBump {
                drift_scale,
                drift_power,
            } => make_shifted_mollifier(
                dimension,
                Drift {
                    scale: *drift_scale,
                    power: *drift_power,
                },
            ),
            Self::ShiftedGaussian => make_shifted_gaussian(dimension),
            Self::Concentrating => {
                let s = s.ok_or_else(|| {
                    Error::InvalidParameter("the concentrating kernel needs s".into())
                })?;
                make_concentrating(dimension, s, p)
            }
            Self::Zero => make_zero(dimension),
            Self::CustomRadial {
                pieces,
                epsilon_domain,
            } => make_custom_radial(dimension, pieces.clone(), *epsilon_domain),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_radial_with, RadialDomain};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_families(n: usize) -> Vec<KernelFamily> {
        vec![
            make_fractional(n, 2.0).unwrap(),
            make_log_corrected(n, 2.0).unwrap(),
            make_capped_fractional(n, 1.0).unwrap(),
            make_shifted_mollifier(n, Drift::inverse()).unwrap(),
            make_shifted_gaussian(n).unwrap(),
            make_concentrating(n, 0.5, 2.0).unwrap(),
            make_zero(n).unwrap(),
        ]
    }

    #[test]
    fn fractional_examples() {
        let k = make_fractional(1, 2.0).unwrap();
        assert_eq!(k.closed_form_tail_mass(0.1, 1.0).unwrap().unwrap(), 1.0);
        assert_relative_eq!(
            k.closed_form_moment(0.1, 1.0, 2.0).unwrap().unwrap(),
            0.2 / 1.8,
            max_relative = 1e-15
        );
        assert!(matches!(
            k.closed_form_moment(0.1, 1.0, 0.2).unwrap(),
            Err(Error::Divergent(_))
        ));
        for n in 1..=3 {
            let k = make_fractional(n, 2.0).unwrap();
            let mut z = vec![0.0; n];
            z[n - 1] = 1.0;
            assert_relative_eq!(k.eval(0.3, &z), 0.6 / sphere_area(n), max_relative = 1e-15);
            assert_eq!(k.eval(0.3, &vec![0.0; n]), f64::INFINITY);
        }
    }

    #[test]
    fn log_corrected_examples() {
        let k = make_log_corrected(2, 2.0).unwrap();
        assert_relative_eq!(
            k.closed_form_moment(0.1, 1.0, 2.0).unwrap().unwrap(),
            0.01 / 0.81,
            max_relative = 1e-14
        );
        let expected = 0.2 * (2f64.powf(1.8) - 1.0) / 1.8 + 0.01 / 0.81;
        assert_relative_eq!(
            k.closed_form_moment(0.1, 2.0, 2.0).unwrap().unwrap(),
            expected,
            max_relative = 1e-14
        );
        assert!(k.eval(0.1, &[1.0 - 1e-15, 0.0]) < 1e-14);
    }

    #[test]
    fn capped_examples() {
        let k = make_capped_fractional(3, 2.0).unwrap();
        assert_relative_eq!(
            k.closed_form_tail_mass(0.1, 2.0).unwrap().unwrap(),
            2f64.powf(-0.2),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            k.closed_form_tail_mass(0.1, 2.0).unwrap().unwrap(),
            0.870_550_563_296_124,
            max_relative = 1e-14
        );
        assert_eq!(k.eval(1e-6, &[0.1, 0.2, 0.3]), 1e-6);
    }

    #[test]
    fn closed_forms_match_radial_quadrature() {
        let cfg = QuadratureConfig::default();
        let families = [
            make_fractional(2, 2.0).unwrap(),
            make_log_corrected(3, 2.0).unwrap(),
            make_capped_fractional(1, 1.0).unwrap(),
            make_custom_radial(
                2,
                vec![
                    PowerPiece {
                        from: 0.0,
                        coeff: 0.3,
                        eps_power: 1.0,
                        exponent: -2.0,
                        eps_exponent: -1.0,
                    },
                    PowerPiece {
                        from: 1.5,
                        coeff: 0.2,
                        eps_power: 0.0,
                        exponent: -3.5,
                        eps_exponent: 0.0,
                    },
                ],
                (0.0, 1.0),
            )
            .unwrap(),
        ];
        for k in &families {
            let n = k.dimension;
            let area = sphere_area(n);
            for &eps in &[0.3, 0.05] {
                for &radius in &[0.5, 1.0, 2.5] {
                    let domain = RadialDomain::new(radius, f64::INFINITY)
                        .decay(k.tail_exponent(eps))
                        .breaks(k.radial_breakpoints(eps));
                    let tail = integrate_radial_with(
                        |r| Ok(area * r.powi(n as i32 - 1) * k.profile(eps, r)),
                        &domain,
                        &cfg,
                    )
                    .unwrap();
                    assert!(tail.converged, "{} tail", k.name);
                    let closed = k.closed_form_tail_mass(eps, radius).unwrap().unwrap();
                    assert_relative_eq!(tail.value, closed, max_relative = 1e-8);

                    let q = 1.5;
                    let domain = RadialDomain::new(0.0, radius)
                        .singular(true)
                        .breaks(k.radial_breakpoints(eps));
                    let mom = integrate_radial_with(
                        |r| Ok(area * r.powf(n as f64 - 1.0 + q) * k.profile(eps, r)),
                        &domain,
                        &cfg,
                    )
                    .unwrap();
                    let closed = k.closed_form_moment(eps, radius, q).unwrap().unwrap();
                    assert_relative_eq!(mom.value, closed, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn non_negative_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            for k in all_families(n) {
                for _ in 0..10_000 / 21 + 1 {
                    let eps = rng.random_range(1e-4..0.99);
                    let z: Vec<f64> = (0..n).map(|_| rng.random_range(-30.0..30.0)).collect();
                    let v = k.eval(eps, &z);
                    assert!(v >= 0.0, "{} at ε = {eps}, z = {z:?}", k.name);
                }
            }
        }
    }

    #[test]
    fn eval_agrees_with_radial_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for k in all_families(n) {
                for _ in 0..200 {
                    let eps = rng.random_range(1e-3..0.9);
                    let c = k.shift_center(eps).unwrap_or_else(|| vec![0.0; n]);
                    let z: Vec<f64> = c
                        .iter()
                        .map(|ci| ci + rng.random_range(-3.0..3.0))
                        .collect();
                    let r = z
                        .iter()
                        .zip(&c)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    let v = k.eval(eps, &z);
                    let w = k.radial_profile(eps, r).unwrap();
                    assert!((v - w).abs() <= 1e-14 * (1.0 + v), "{}: {v} vs {w}", k.name);
                }
            }
        }
    }

    #[test]
    fn drift_grows_along_schedule() {
        let schedule = EpsilonSchedule::default();
        for k in [
            make_shifted_mollifier(
                2,
                Drift {
                    scale: 0.5,
                    power: 0.5,
                },
            )
            .unwrap(),
            make_shifted_gaussian(1).unwrap(),
        ] {
            let norms: Vec<f64> = schedule
                .values()
                .iter()
                .map(|&e| {
                    k.shift_center(e)
                        .unwrap()
                        .iter()
                        .map(|x| x * x)
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            assert!(norms.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn shifted_bump_has_unit_mass() {
        for n in 1..=3 {
            let k = make_shifted_mollifier(n, Drift::inverse()).unwrap();
            let KernelKind::ShiftedBump { norm, .. } = k.kind else {
                unreachable!()
            };
            assert_relative_eq!(
                norm * shape_moment(mollifier, n, 0.0).unwrap(),
                1.0,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn concentrating_is_normalized_in_sp_moment() {
        let k = make_concentrating(1, 0.25, 2.0).unwrap();
        let cfg = QuadratureConfig::default();
        let eps = 0.01;
        let r = integrate_radial(
            |r| 2.0 * r.powf(0.5) * k.profile(eps, r),
            0.0,
            eps,
            true,
            None,
            &cfg,
        )
        .unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn schedule_validation() {
        let d = EpsilonSchedule::default();
        assert_eq!(d.len(), 12);
        assert_eq!(d.values()[0], 0.1);
        assert_relative_eq!(d.values()[11], 0.1 * 0.5f64.powi(11));
        assert!(EpsilonSchedule::new(vec![0.1, 0.1]).is_err());
        assert!(EpsilonSchedule::new(vec![0.1, 0.2]).is_err());
        assert!(EpsilonSchedule::new(vec![-0.1]).is_err());
        let k = make_fractional(1, 2.0).unwrap();
        assert!(EpsilonSchedule::new(vec![1.5, 0.5])
            .unwrap()
            .check_domain(&k)
            .is_err());
    }

    #[test]
    fn spec_round_trip() {
        let s: KernelSpec = serde_json::from_str(
            r#"{"name": "shifted-bump", "drift_scale": 10, "drift_power": 0}"#,
        )
        .unwrap();
        assert_eq!(
            s,
            KernelSpec::ShiftedBump {
                drift_scale: 10.0,
                drift_power: 0.0
            }
        );
        let back: KernelSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(KernelSpec::parse_name("nope").is_err());
        assert!(KernelSpec::Concentrating.build(1, 2.0, None).is_err());
    }
}
