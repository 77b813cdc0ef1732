//! Functions sampled on a uniform lattice, with multilinear interpolation.
//!
//! File format: a header line `N o_1 … o_N h n_1 … n_N` (origin, spacing, node
//! counts per axis) followed by the n_1·…·n_N values, whitespace separated,
//! in row-major order (last axis fastest). Outside the lattice box u = 0.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    origin: Vec<f64>,
    spacing: f64,
    extents: Vec<usize>,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(
        origin: Vec<f64>,
        spacing: f64,
        extents: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n = origin.len();
        if n == 0 || extents.len() != n {
            return Err(Error::Parse(format!(
                "grid origin has {} coordinates but {} extents were given",
                n,
                extents.len()
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Parse(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        if extents.iter().any(|&e| e < 2) {
            return Err(Error::Parse(
                "every grid axis needs at least 2 nodes".into(),
            ));
        }
        let count: usize = extents.iter().product();
        if values.len() != count {
            return Err(Error::Parse(format!(
                "grid declares {count} nodes but {} values were read",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("grid contains non-finite value {v}")));
        }
        Ok(Self {
            origin,
            spacing,
            extents,
            values,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid file".into()))?;
        let nums: Vec<f64> = header
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad header token `{t}`")))
            })
            .collect::<Result<_>>()?;
        let n = *nums
            .first()
            .ok_or_else(|| Error::Parse("missing dimension in grid header".into()))?;
        if !(n >= 1.0 && n.fract() == 0.0) {
            return Err(Error::Parse(format!(
                "grid dimension must be a positive integer, got {n}"
            )));
        }
        let n = n as usize;
        if nums.len() != 2 + 2 * n {
            return Err(Error::Parse(format!(
                "grid header for N = {n} needs {} numbers, found {}",
                2 + 2 * n,
                nums.len()
            )));
        }
        let origin = nums[1..=n].to_vec();
        let spacing = nums[n + 1];
        let extents = nums[n + 2..]
            .iter()
            .map(|&e| {
                if e >= 0.0 && e.fract() == 0.0 {
                    Ok(e as usize)
                } else {
                    Err(Error::Parse(format!(
                        "grid extent must be a whole number, got {e}"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let values = lines
            .flat_map(str::split_whitespace)
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad grid value `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(origin, spacing, extents, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| e.in_cell(format!("grid file {}", path.display())))
    }

    /// Sample `f` at the nodes of the given lattice.
    pub fn sample<F>(f: F, origin: Vec<f64>, spacing: f64, extents: Vec<usize>) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let count: usize = extents.iter().product();
        let mut values = Vec::with_capacity(count);
        let mut x = origin.clone();
        for flat in 0..count {
            let mut rem = flat;
            for axis in (0..extents.len()).rev() {
                x[axis] = origin[axis] + spacing * (rem % extents[axis]) as f64;
                rem /= extents[axis];
            }
            values.push(f(&x));
        }
        Self::new(origin, spacing, extents, values)
    }

    /// Serialize in the file format read by [`Grid::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{}", self.dimension());
        for o in &self.origin {
            out.push_str(&format!(" {o:e}"));
        }
        out.push_str(&format!(" {:e}", self.spacing));
        for e in &self.extents {
            out.push_str(&format!(" {e}"));
        }
        out.push('\n');
        let row = *self.extents.last().expect("non-empty");
        for chunk in self.values.chunks(row) {
            let line: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn dimension(&self) -> usize {
        self.origin.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Centre of the lattice box.
    pub fn center(&self) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.extents)
            .map(|(o, &e)| o + 0.5 * self.spacing * (e - 1) as f64)
            .collect()
    }

    /// Half diagonal of the lattice box.
    pub fn half_diagonal(&self) -> f64 {
        self.extents
            .iter()
            .map(|&e| {
                let half = 0.5 * self.spacing * (e - 1) as f64;
                half * half
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Value at integer node index `k` (any integers; zero outside the box).
    pub fn node(&self, k: &[i64]) -> f64 {
        let mut flat = 0usize;
        for (ki, &e) in k.iter().zip(&self.extents) {
            if *ki < 0 || *ki as usize >= e {
                return 0.0;
            }
            flat = flat * e + *ki as usize;
        }
        self.values[flat]
    }

    /// Multilinear interpolation at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.interpolate(x, None)
    }

    /// Gradient of the multilinear interpolant (one-sided on cell faces).
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.interpolate(x, Some(out));
    }

    fn interpolate(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let n = self.dimension();
        let mut base = vec![0i64; n];
        let mut frac = vec![0.0; n];
        for axis in 0..n {
            let t = (x[axis] - self.origin[axis]) / self.spacing;
            let last = (self.extents[axis] - 1) as f64;
            if !(t >= 0.0 && t <= last) {
                if let Some(g) = grad.as_deref_mut() {
                    g.fill(0.0);
                }
                return 0.0;
            }
            let fl = t.floor().min(last - 1.0);
            base[axis] = fl as i64;
            frac[axis] = t - fl;
        }
        let mut acc = 0.0;
        let mut corner = vec![0i64; n];
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        for mask in 0..(1usize << n) {
            let mut w = 1.0;
            for axis in 0..n {
                let bit = (mask >> axis) & 1;
                corner[axis] = base[axis] + bit as i64;
                w *= if bit == 1 {
                    frac[axis]
                } else {
                    1.0 - frac[axis]
                };
            }
            let v = self.node(&corner);
            acc += w * v;
            if let Some(g) = grad.as_deref_mut() {
                for (axis, gi) in g.iter_mut().enumerate() {
                    // ∂w/∂x_axis: replace the axis factor by ±1/h.
                    let mut dw = if (mask >> axis) & 1 == 1 { 1.0 } else { -1.0 } / self.spacing;
                    for other in (0..n).filter(|&o| o != axis) {
                        dw *= if (mask >> other) & 1 == 1 {
                            frac[other]
                        } else {
                            1.0 - frac[other]
                        };
                    }
                    *gi += dw * v;
                }
            }
        }
        acc
    }

    /// Node coordinates along one axis.
    pub(crate) fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        (0..self.extents[axis])
            .map(|k| self.origin[axis] + self.spacing * k as f64)
            .collect()
    }

    /// ∫ f over the boxes cut out by the per-axis breakpoints, with a
    /// 3-point Gauss–Legendre rule in every direction of every cell.
    pub(crate) fn cell_cubature<F>(breaks: &[Vec<f64>], mut f: F) -> f64
    where
        F: FnMut(&[f64]) -> f64,
    {
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let n = breaks.len();
        if breaks.iter().any(|b| b.len() < 2) {
            return 0.0;
        }
        let mut cell = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut sum = 0.0;
        let mut comp = 0.0;
        loop {
            let mut volume = 1.0;
            for axis in 0..n {
                volume *= 0.5 * (breaks[axis][cell[axis] + 1] - breaks[axis][cell[axis]]);
            }
            let mut local = 0.0;
            let points = 3usize.pow(n as u32);
            for idx in 0..points {
                let mut rem = idx;
                let mut w = 1.0;
                for axis in 0..n {
                    let j = rem % 3;
                    rem /= 3;
                    let (a, b) = (breaks[axis][cell[axis]], breaks[axis][cell[axis] + 1]);
                    x[axis] = 0.5 * (a + b) + 0.5 * (b - a) * NODES[j];
                    w *= WEIGHTS[j];
                }
                local += w * f(&x);
            }
            let y = local * volume - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            let mut axis = n;
            loop {
                if axis == 0 {
                    return sum;
                }
                axis -= 1;
                cell[axis] += 1;
                if cell[axis] + 1 < breaks[axis].len() {
                    break;
                }
                cell[axis] = 0;
            }
        }
    }

    /// Every other node along each axis: the same function at spacing 2h.
    pub fn coarsen(&self) -> Result<Self> {
        let extents: Vec<usize> = self.extents.iter().map(|&e| e.div_ceil(2)).collect();
        let count: usize = extents.iter().product();
        let n = self.dimension();
        let mut values = Vec::with_capacity(count);
        let mut k = vec![0i64; n];
        for flat in 0..count {
            let mut rem = flat;
            for axis in (0..n).rev() {
                k[axis] = 2 * (rem % extents[axis]) as i64;
                rem /= extents[axis];
            }
            values.push(self.node(&k));
        }
        Self::new(self.origin.clone(), 2.0 * self.spacing, extents, values)
    }
}
