//! Test functions u and the quantities built from them: ‖u‖ₚᵖ, ‖∇u‖ₚᵖ, the
//! translation modulus A_u(z) = ∫|u(x+z) − u(x)|ᵖ dx, the defect
//! g_u(z) = 2‖u‖ₚᵖ − A_u(z), and the Gagliardo seminorm.

mod grid;
mod modulus;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use grid::Grid;

use crate::error::{Error, Result};
use crate::kernel::mollifier;
use crate::quadrature::{
    integrate_interval, integrate_radial_with, IntegralResult, QuadratureConfig, RadialDomain,
};
use crate::special::{gamma, sphere_area};

/// Relative size of |u|ᵖ at which a Gaussian is treated as vanished.
const GAUSSIAN_NEGLIGIBLE: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Regularity {
    SmoothCompact,
    W1p,
    /// Only W^{s,p} with sp < `max_sp`.
    Wsp {
        max_sp: f64,
    },
}

impl Regularity {
    pub fn has_gradient(&self) -> bool {
        !matches!(self, Regularity::Wsp { .. })
    }

    pub fn allows_sp(&self, sp: f64) -> bool {
        match self {
            Regularity::Wsp { max_sp } => sp < *max_sp,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Bump { radius: f64 },
    QuadraticBump { radius: f64 },
    Indicator { a: f64, b: f64 },
    Gaussian { width: f64 },
    SeparatedPair { radius: f64, distance: f64 },
    Zero,
    Grid(Arc<Grid>),
}

type Profile = fn(f64) -> f64;

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub name: String,
    pub dimension: usize,
    pub regularity: Regularity,
    shape: Shape,
    amplitude: f64,
    offset: Vec<f64>,
}

fn smooth_step(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C^∞ cutoff: 1 on [0, 1/2], 0 on [1, ∞).
fn cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = smooth_step(1.0 - s);
        a / (a + smooth_step(s - 0.5))
    }
}

fn cutoff_derivative(s: f64) -> f64 {
    if s <= 0.5 || s >= 1.0 {
        return 0.0;
    }
    let a = smooth_step(1.0 - s);
    let b = smooth_step(s - 0.5);
    let da = -a / ((1.0 - s) * (1.0 - s));
    let db = b / ((s - 0.5) * (s - 0.5));
    (da * b - a * db) / ((a + b) * (a + b))
}

/// g(s) = s²/2 near the origin, cut off smoothly to vanish from s = 1 on.
pub fn quadratic_profile(s: f64) -> f64 {
    0.5 * s * s * cutoff(s)
}

fn quadratic_profile_derivative(s: f64) -> f64 {
    s * cutoff(s) + 0.5 * s * s * cutoff_derivative(s)
}

fn mollifier_derivative(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q > 0.0 {
        mollifier(s) * (-2.0 * s / (q * q))
    } else {
        0.0
    }
}

fn gaussian_profile(s: f64) -> f64 {
    (-s * s).exp()
}

fn gaussian_profile_derivative(s: f64) -> f64 {
    -2.0 * s * (-s * s).exp()
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be ≥ 1, got {p}")))
    }
}

fn check_dimension(dimension: usize) -> Result<()> {
    if dimension == 0 {
        Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ))
    } else {
        Ok(())
    }
}

fn check_radius(what: &str, r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive, got {r}"
        )))
    }
}

/// Standard mollifier profile scaled to support radius `radius`.
pub fn bump(dimension: usize, radius: f64) -> Result<TestFunction> {
    check_dimension(dimension)?;
    check_radius("bump radius", radius)?;
    Ok(TestFunction::new(
        "bump",
        dimension,
        Regularity::SmoothCompact,
        Shape::Bump { radius },
    ))
}

/// u(x) = g(|x|/radius) with g(s) = s²/2 for s ≤ 1/2.
pub fn quadratic_bump(dimension: usize, radius: f64) -> Result<TestFunction> {
    check_dimension(dimension)?;
    check_radius("quadratic-bump radius", radius)?;
    Ok(TestFunction::new(
        "quadratic-bump",
        dimension,
        Regularity::SmoothCompact,
        Shape::QuadraticBump { radius },
    ))
}

/// Indicator of [a, b] on the line.
pub fn indicator_interval(a: f64, b: f64) -> Result<TestFunction> {
    if !(b > a && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "indicator needs a < b, got [{a}, {b}]"
        )));
    }
    Ok(TestFunction::new(
        "indicator-interval",
        1,
        Regularity::Wsp { max_sp: 1.0 },
        Shape::Indicator { a, b },
    ))
}

/// u(x) = exp(−|x|²/width²).
pub fn gaussian(dimension: usize, width: f64) -> Result<TestFunction> {
    check_dimension(dimension)?;
    check_radius("gaussian width", width)?;
    Ok(TestFunction::new(
        "gaussian",
        dimension,
        Regularity::W1p,
        Shape::Gaussian { width },
    ))
}

/// Two bumps of the given radius centred at ±distance/2 along e₁.
pub fn separated_pair(dimension: usize, radius: f64, distance: f64) -> Result<TestFunction> {
    check_dimension(dimension)?;
    check_radius("pair radius", radius)?;
    if !(distance >= 2.0 * radius && distance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "separated-pair needs distance ≥ 2·radius, got {distance} with radius {radius}"
        )));
    }
    Ok(TestFunction::new(
        "separated-pair",
        dimension,
        Regularity::SmoothCompact,
        Shape::SeparatedPair { radius, distance },
    ))
}

pub fn zero(dimension: usize) -> Result<TestFunction> {
    check_dimension(dimension)?;
    Ok(TestFunction::new(
        "zero",
        dimension,
        Regularity::SmoothCompact,
        Shape::Zero,
    ))
}

/// Lattice function; multilinear interpolation makes it Lipschitz, hence W1p by default.
pub fn from_grid(grid: Grid, regularity: Option<Regularity>) -> TestFunction {
    TestFunction::new(
        "grid",
        grid.dimension(),
        regularity.unwrap_or(Regularity::W1p),
        Shape::Grid(Arc::new(grid)),
    )
}

impl TestFunction {
    fn new(name: &str, dimension: usize, regularity: Regularity, shape: Shape) -> Self {
        Self {
            name: name.into(),
            dimension,
            regularity,
            shape,
            amplitude: 1.0,
            offset: vec![0.0; dimension],
        }
    }

    /// λ·u.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            amplitude: self.amplitude * lambda,
            ..self.clone()
        }
    }

    /// u(· − h).
    pub fn translated(&self, h: &[f64]) -> Self {
        let offset = self.offset.iter().zip(h).map(|(a, b)| a + b).collect();
        Self {
            offset,
            ..self.clone()
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Radial profile G and scale L with u(x) = amplitude·G(|x − c|/L).
    fn radial_shape(&self) -> Option<(Profile, Profile, f64)> {
        match self.shape {
            Shape::Bump { radius } => Some((mollifier, mollifier_derivative, radius)),
            Shape::QuadraticBump { radius } => {
                Some((quadratic_profile, quadratic_profile_derivative, radius))
            }
            Shape::Gaussian { width } => {
                Some((gaussian_profile, gaussian_profile_derivative, width))
            }
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Zero) || self.amplitude == 0.0
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        self.amplitude * self.shape_eval(&y)
    }

    fn shape_eval(&self, y: &[f64]) -> f64 {
        let norm = |y: &[f64], shift: f64| -> f64 {
            y.iter()
                .enumerate()
                .map(|(i, v)| {
                    let d = if i == 0 { v - shift } else { *v };
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        };
        match &self.shape {
            Shape::Bump { radius } => mollifier(norm(y, 0.0) / radius),
            Shape::QuadraticBump { radius } => quadratic_profile(norm(y, 0.0) / radius),
            Shape::Gaussian { width } => gaussian_profile(norm(y, 0.0) / width),
            Shape::Indicator { a, b } => {
                if y[0] >= *a && y[0] <= *b {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::SeparatedPair { radius, distance } => {
                mollifier(norm(y, 0.5 * distance) / radius)
                    + mollifier(norm(y, -0.5 * distance) / radius)
            }
            Shape::Zero => 0.0,
            Shape::Grid(g) => g.eval(y),
        }
    }

    /// Centre of the ball given by [`support_radius`](Self::support_radius).
    pub fn support_center(&self) -> Vec<f64> {
        let mut c = self.offset.clone();
        match &self.shape {
            Shape::Indicator { a, b } => c[0] += 0.5 * (a + b),
            Shape::Grid(g) => {
                for (ci, gi) in c.iter_mut().zip(g.center()) {
                    *ci += gi;
                }
            }
            _ => {}
        }
        c
    }

    /// R₀ with supp u inside the closed ball of radius R₀ about the support centre.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.shape {
            Shape::Bump { radius } | Shape::QuadraticBump { radius } => Some(*radius),
            Shape::Indicator { a, b } => Some(0.5 * (b - a)),
            Shape::Gaussian { .. } => None,
            Shape::SeparatedPair { radius, distance } => Some(0.5 * distance + radius),
            Shape::Zero => Some(0.0),
            Shape::Grid(g) => Some(g.half_diagonal()),
        }
    }

    /// Support radius, or for a Gaussian the radius where |u|ᵖ/‖u‖_∞ᵖ < 1e-20 for p ≥ 1.
    pub fn effective_radius(&self) -> f64 {
        match &self.shape {
            Shape::Gaussian { width } => width * (1.0 / GAUSSIAN_NEGLIGIBLE).ln().sqrt(),
            _ => self.support_radius().unwrap_or(0.0),
        }
    }

    /// Beyond this |z| the supports of u and u(· + z) are disjoint and A_u = 2‖u‖ₚᵖ.
    pub fn saturation_radius(&self) -> f64 {
        2.0 * self.effective_radius()
    }

    /// True when A_u(z) depends on z only through |z|.
    pub fn modulus_is_radial(&self) -> bool {
        self.dimension == 1 || self.radial_shape().is_some() || matches!(self.shape, Shape::Zero)
    }

    /// Radii where r ↦ A_u (sphere-averaged) is not smooth.
    pub fn modulus_breakpoints(&self) -> Vec<f64> {
        let mut b = match &self.shape {
            Shape::Indicator { a, b } => vec![b - a],
            Shape::SeparatedPair { radius, distance } => {
                vec![distance - 2.0 * radius, *distance, distance + 2.0 * radius]
            }
            _ => Vec::new(),
        };
        b.push(self.saturation_radius());
        b.retain(|&r| r > 0.0);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// ‖u‖ₚᵖ in closed form, when known.
    pub fn closed_lp_norm(&self, p: f64) -> Option<f64> {
        let amp = self.amplitude.abs().powf(p);
        let n = self.dimension as f64;
        match &self.shape {
            Shape::Zero => Some(0.0),
            Shape::Indicator { a, b } => Some((b - a) * amp),
            Shape::Gaussian { width } => {
                Some(amp * (std::f64::consts::PI * width * width / p).powf(0.5 * n))
            }
            _ => None,
        }
    }

    /// |𝕊^{N−1}| ∫₀^∞ s^{N−1} h(s) ds for a profile-derived h supported in [0, 1].
    fn unit_radial_integral<F>(&self, h: F, cfg: &QuadratureConfig) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let n = self.dimension;
        let k = n as i32 - 1;
        let r = integrate_interval(|s| Ok(s.powi(k) * h(s)), 0.0, 1.0, &[0.5], cfg)?
            .require_converged(|| format!("radial integral for `{}`", self.name))?;
        Ok(sphere_area(n) * r.value)
    }

    pub fn lp_norm_p(&self, p: f64, cfg: &QuadratureConfig) -> Result<f64> {
        check_p(p)?;
        if let Some(v) = self.closed_lp_norm(p) {
            return Ok(v);
        }
        let amp = self.amplitude.abs().powf(p);
        let n = self.dimension as f64;
        match &self.shape {
            Shape::Bump { radius } | Shape::QuadraticBump { radius } => {
                let (g, _, _) = self.radial_shape().expect("radial");
                Ok(
                    amp * radius.powf(n)
                        * self.unit_radial_integral(|s| g(s).abs().powf(p), cfg)?,
                )
            }
            Shape::SeparatedPair { radius, .. } => {
                let single = bump(self.dimension, *radius)?.scaled(self.amplitude);
                Ok(2.0 * single.lp_norm_p(p, cfg)?)
            }
            Shape::Grid(g) => modulus::grid_lp_norm(g, p, cfg).map(|v| v * amp),
            Shape::Zero | Shape::Indicator { .. } | Shape::Gaussian { .. } => unreachable!(),
        }
    }

    /// ‖∇u‖ₚᵖ; only for functions with a weak gradient in Lᵖ.
    pub fn gradient_lp(&self, p: f64, cfg: &QuadratureConfig) -> Result<f64> {
        check_p(p)?;
        if !self.regularity.has_gradient() {
            return Err(Error::Regularity(format!(
                "`{}` is only fractional-Sobolev regular; ‖∇u‖ₚ is undefined",
                self.name
            )));
        }
        let amp = self.amplitude.abs().powf(p);
        let n = self.dimension as f64;
        match &self.shape {
            Shape::Zero => Ok(0.0),
            Shape::Gaussian { width } => Ok(amp
                * sphere_area(self.dimension)
                * width.powf(n - p)
                * 2f64.powf(p)
                * 0.5
                * gamma(0.5 * (n + p))
                * p.powf(-0.5 * (n + p))),
            Shape::Bump { radius } | Shape::QuadraticBump { radius } => {
                let (_, dg, _) = self.radial_shape().expect("radial");
                Ok(amp
                    * radius.powf(n - p)
                    * self.unit_radial_integral(|s| dg(s).abs().powf(p), cfg)?)
            }
            Shape::SeparatedPair { radius, .. } => {
                let single = bump(self.dimension, *radius)?.scaled(self.amplitude);
                Ok(2.0 * single.gradient_lp(p, cfg)?)
            }
            Shape::Grid(g) => modulus::grid_gradient_lp(g, p, cfg).map(|v| v * amp),
            Shape::Indicator { .. } => unreachable!("indicator is tagged Wsp"),
        }
    }

    /// A_u(z) = ∫|u(x+z) − u(x)|ᵖ dx.
    pub fn translation_modulus(&self, p: f64, z: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
        check_p(p)?;
        if z.len() != self.dimension {
            return Err(Error::InvalidParameter(format!(
                "shift has {} coordinates, expected {}",
                z.len(),
                self.dimension
            )));
        }
        modulus::translation_modulus(self, p, z, cfg)
    }

    /// Mean of A_u over the sphere |z| = r (A_u itself when it is radial).
    pub fn averaged_modulus(&self, p: f64, r: f64, cfg: &QuadratureConfig) -> Result<f64> {
        check_p(p)?;
        if self.modulus_is_radial() || r == 0.0 {
            let mut z = vec![0.0; self.dimension];
            z[0] = r;
            return modulus::translation_modulus(self, p, &z, cfg);
        }
        if r >= self.saturation_radius() {
            return Ok(2.0 * self.lp_norm_p(p, cfg)?);
        }
        crate::quadrature::angular_average(
            |z| modulus::translation_modulus(self, p, z, cfg),
            r,
            self.dimension,
            cfg.angular_order,
        )
    }

    /// g_u(z) = 2‖u‖ₚᵖ − A_u(z).
    pub fn ms_defect(&self, p: f64, z: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
        Ok(2.0 * self.lp_norm_p(p, cfg)? - self.translation_modulus(p, z, cfg)?)
    }

    /// [u]ᵖ_{W^{s,p}} = ∫ A_u(z)|z|^(−N−sp) dz.
    pub fn gagliardo_seminorm_p(
        &self,
        s: f64,
        p: f64,
        cfg: &QuadratureConfig,
    ) -> Result<IntegralResult> {
        check_p(p)?;
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "s must lie in (0, 1), got {s}"
            )));
        }
        let sp = s * p;
        if !self.regularity.allows_sp(sp) {
            return Err(Error::Divergent(format!(
                "`{}` has infinite W^{{s,p}} seminorm for sp = {sp} (class {:?})",
                self.name, self.regularity
            )));
        }
        if self.is_zero() {
            return Ok(IntegralResult::zero());
        }
        let area = sphere_area(self.dimension);
        let r_sat = self.saturation_radius();
        let domain = RadialDomain::new(0.0, r_sat)
            .singular(true)
            .breaks(self.modulus_breakpoints());
        let near = integrate_radial_with(
            |r| Ok(area * r.powf(-1.0 - sp) * self.averaged_modulus(p, r, cfg)?),
            &domain,
            cfg,
        )?;
        let far = 2.0 * self.lp_norm_p(p, cfg)? * area * r_sat.powf(-sp) / sp;
        let total = IntegralResult {
            value: near.value + far,
            ..near
        };
        total.require_converged(|| {
            format!(
                "Gagliardo seminorm of `{}` with s = {s}, p = {p}",
                self.name
            )
        })
    }
}

fn one() -> f64 {
    1.0
}

fn four() -> f64 {
    4.0
}

/// Test function selection by name, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Bump {
        #[serde(default = "one")]
        radius: f64,
    },
    QuadraticBump {
        #[serde(default = "one")]
        radius: f64,
    },
    #[serde(alias = "indicator")]
    IndicatorInterval {
        #[serde(default)]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    Gaussian {
        #[serde(default = "one")]
        width: f64,
    },
    SeparatedPair {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "four")]
        distance: f64,
    },
    Zero,
    Grid {
        path: PathBuf,
        #[serde(default)]
        regularity: Option<Regularity>,
    },
}

impl FunctionSpec {
    /// Defaults for a bare name; `grid` needs a path and is not accepted here.
    pub fn parse_name(name: &str) -> Result<Self> {
        Ok(match name {
            "bump" => Self::Bump { radius: 1.0 },
            "quadratic-bump" => Self::QuadraticBump { radius: 1.0 },
            "indicator" | "indicator-interval" => Self::IndicatorInterval { a: 0.0, b: 1.0 },
            "gaussian" => Self::Gaussian { width: 1.0 },
            "separated-pair" => Self::SeparatedPair {
                radius: 1.0,
                distance: 4.0,
            },
            "zero" => Self::Zero,
            _ => {
                return Err(Error::Unknown {
                    kind: "function",
                    name: name.into(),
                })
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bump { .. } => "bump",
            Self::QuadraticBump { .. } => "quadratic-bump",
            Self::IndicatorInterval { .. } => "indicator-interval",
            Self::Gaussian { .. } => "gaussian",
            Self::SeparatedPair { .. } => "separated-pair",
            Self::Zero => "zero",
            Self::Grid { .. } => "grid",
        }
    }

    pub fn build(&self, dimension: usize) -> Result<TestFunction> {
        let f = match self {
            Self::Bump { radius } => bump(dimension, *radius)?,
            Self::QuadraticBump { radius } => quadratic_bump(dimension, *radius)?,
            Self::IndicatorInterval { a, b } => {
                if dimension != 1 {
                    return Err(Error::UnsupportedDimension(dimension)
                        .in_cell("indicator-interval is one-dimensional"));
                }
                indicator_interval(*a, *b)?
            }
            Self::Gaussian { width } => gaussian(dimension, *width)?,
            Self::SeparatedPair { radius, distance } => {
                separated_pair(dimension, *radius, *distance)?
            }
            Self::Zero => zero(dimension)?,
            Self::Grid { path, regularity } => {
                let g = Grid::load(path)?;
                if g.dimension() != dimension {
                    return Err(Error::InvalidParameter(format!(
                        "grid {} is {}-dimensional, study runs in N = {dimension}",
                        path.display(),
                        g.dimension()
                    )));
                }
                from_grid(g, *regularity)
            }
        };
        Ok(f)
    }
}
