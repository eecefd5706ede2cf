//! Units, uniform spectral grids, sampled complex fields and the Hermite-Gaussian basis.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TfmError};

pub const TERA: f64 = 1e12;
pub const GIGA: f64 = 1e9;

/// Angular frequency in rad/s. Also used for detunings, decay rates and couplings.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularFrequency(f64);

/// Decay and coupling rates share the angular-frequency unit.
pub type Rate = AngularFrequency;

impl AngularFrequency {
    pub const ZERO: Self = Self(0.0);

    pub const fn from_rad_per_s(v: f64) -> Self {
        Self(v)
    }

    pub fn from_thz(v: f64) -> Self {
        Self(v * TERA)
    }

    pub fn from_ghz(v: f64) -> Self {
        Self(v * GIGA)
    }

    pub const fn rad_per_s(self) -> f64 {
        self.0
    }

    pub fn ghz(self) -> f64 {
        self.0 / GIGA
    }

    pub fn thz(self) -> f64 {
        self.0 / TERA
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Add for AngularFrequency {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for AngularFrequency {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for AngularFrequency {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Mul<f64> for AngularFrequency {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self(self.0 * rhs)
    }
}

impl fmt::Display for AngularFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} GHz", self.ghz())
    }
}

/// Square root of a rate, the unit of a bus coupling coefficient (s^-1/2).
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SqrtRate(f64);

impl SqrtRate {
    pub const fn from_sqrt_per_s(v: f64) -> Self {
        Self(v)
    }

    /// Value quoted in sqrt(THz), i.e. sqrt(1e12 s^-1).
    pub fn from_sqrt_thz(v: f64) -> Self {
        Self(v * TERA.sqrt())
    }

    pub const fn sqrt_per_s(self) -> f64 {
        self.0
    }

    pub fn squared(self) -> Rate {
        Rate::from_rad_per_s(self.0 * self.0)
    }
}

/// Uniform sampling `center + j*spacing`, `j = 0..n_points`, spanning `center +/- half_span`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    center: AngularFrequency,
    half_span: AngularFrequency,
    n_points: usize,
}

impl SpectralGrid {
    pub fn new(center: AngularFrequency, half_span: AngularFrequency, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(TfmError::Domain(format!("grid needs at least 2 points, got {n_points}")));
        }
        if !(half_span.rad_per_s() > 0.0) || !half_span.is_finite() || !center.is_finite() {
            return Err(TfmError::Domain(format!("grid half span must be positive and finite, got {half_span}")));
        }
        Ok(Self { center, half_span, n_points })
    }

    /// Grid with the same spacing as `self` re-centred at `center`.
    pub fn recentered(&self, center: AngularFrequency) -> Self {
        Self { center, ..*self }
    }

    pub fn center(&self) -> AngularFrequency {
        self.center
    }

    pub fn half_span(&self) -> AngularFrequency {
        self.half_span
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample spacing in rad/s.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_span.rad_per_s() / (self.n_points - 1) as f64
    }

    /// Offset of sample `j` from the centre, in rad/s.
    pub fn detuning(&self, j: usize) -> f64 {
        -self.half_span.rad_per_s() + j as f64 * self.spacing()
    }

    pub fn point(&self, j: usize) -> f64 {
        self.center.rad_per_s() + self.detuning(j)
    }

    pub fn detunings(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.detuning(j)).collect()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Grid of pairwise sums: `2n-1` points on the same spacing, centred at twice the centre.
    pub fn sum_grid(&self, other: &SpectralGrid) -> Result<SpectralGrid> {
        self.check_spacing(other)?;
        let n = self.n_points + other.n_points - 1;
        let half = self.half_span + other.half_span;
        SpectralGrid::new(self.center + other.center, half, n)
    }

    pub fn check_spacing(&self, other: &SpectralGrid) -> Result<()> {
        let (a, b) = (self.spacing(), other.spacing());
        if ((a - b) / a).abs() > 1e-12 {
            return Err(TfmError::Shape(format!("grid spacings differ: {a} vs {b} rad/s")));
        }
        Ok(())
    }

    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        self.n_points == other.n_points
            && (self.center.rad_per_s() - other.center.rad_per_s()).abs() <= 1e-12 * self.center.rad_per_s().abs().max(1.0)
            && (self.half_span.rad_per_s() - other.half_span.rad_per_s()).abs() <= 1e-12 * self.half_span.rad_per_s()
    }
}

/// Complex samples on a 1-D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field1D {
    pub grid: SpectralGrid,
    pub values: Vec<Complex64>,
}

impl Field1D {
    pub fn new(grid: SpectralGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(TfmError::Shape(format!("{} values for a {}-point grid", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(TfmError::Numeric("non-finite field sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SpectralGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn pointwise(&self, other: &Field1D) -> Result<Field1D> {
        if !self.grid.same_as(&other.grid) {
            return Err(TfmError::Shape("pointwise product on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Field1D { grid: self.grid, values })
    }
}

/// Complex samples on a signal x idler grid. Rows index the signal axis, columns the idler
/// axis, so the column-major storage has the signal index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    pub grid_s: SpectralGrid,
    pub grid_i: SpectralGrid,
    pub values: DMatrix<Complex64>,
}

impl Field2D {
    pub fn new(grid_s: SpectralGrid, grid_i: SpectralGrid, values: DMatrix<Complex64>) -> Result<Self> {
        if values.nrows() != grid_s.len() || values.ncols() != grid_i.len() {
            return Err(TfmError::Shape(format!(
                "{}x{} values for a {}x{} grid",
                values.nrows(),
                values.ncols(),
                grid_s.len(),
                grid_i.len()
            )));
        }
        Ok(Self { grid_s, grid_i, values })
    }

    pub fn cell_area(&self) -> f64 {
        self.grid_s.spacing() * self.grid_i.spacing()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_area()
    }
}

/// Hermite-Gaussian sample with a flag for grids too narrow to hold the mode's norm.
#[derive(Clone, Debug, PartialEq)]
pub struct HgMode {
    pub field: Field1D,
    pub truncated: bool,
}

pub const MAX_HG_ORDER: usize = 10;

/// Normalized Hermite function psi_n(t) for every order up to `n`, by the stable
/// three-term recurrence (no factorials, no overflow).
pub fn hermite_functions(n: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let psi0 = PI.powf(-0.25) * (-0.5 * t * t).exp();
    out.push(psi0);
    if n >= 1 {
        out.push(std::f64::consts::SQRT_2 * t * psi0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// f_n(dw) = H_n(dw/sigma) exp(-(dw/sigma)^2/2) / sqrt(n! sqrt(pi) 2^n sigma), real and signed.
pub fn hg_value(n: usize, detuning: f64, sigma: f64) -> f64 {
    hermite_functions(n, detuning / sigma)[n] / sigma.sqrt()
}

pub fn hg_mode(n: usize, grid: &SpectralGrid, center: AngularFrequency, sigma: AngularFrequency) -> Result<HgMode> {
    if !(sigma.rad_per_s() > 0.0) {
        return Err(TfmError::Domain(format!("HG width must be positive, got {sigma}")));
    }
    if n > MAX_HG_ORDER {
        return Err(TfmError::Domain(format!("HG order {n} above {MAX_HG_ORDER}")));
    }
    let s = sigma.rad_per_s();
    let c = center.rad_per_s();
    let field = Field1D::from_fn(*grid, |w| Complex64::new(hg_value(n, w - c, s), 0.0))?;
    let truncated = (field.norm_sqr() - 1.0).abs() > 1e-3;
    Ok(HgMode { field, truncated })
}

/// alpha_0(w) = exp(-(w - center)^2 / (2 sigma_p^2)), peak value 1.
pub fn gaussian_envelope(grid: &SpectralGrid, center: AngularFrequency, sigma_p: AngularFrequency) -> Result<Field1D> {
    if !(sigma_p.rad_per_s() > 0.0) {
        return Err(TfmError::Domain(format!("pump bandwidth must be positive, got {sigma_p}")));
    }
    let (c, s) = (center.rad_per_s(), sigma_p.rad_per_s());
    Field1D::from_fn(*grid, |w| {
        let t = (w - c) / s;
        Complex64::new((-0.5 * t * t).exp(), 0.0)
    })
}

/// Rectangle-rule quadrature of conj(a) b.
pub fn inner_product(a: &Field1D, b: &Field1D) -> Result<Complex64> {
    if !a.grid.same_as(&b.grid) {
        return Err(TfmError::Shape("inner product of fields on different grids".into()));
    }
    let sum: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    Ok(sum * a.grid.spacing())
}

pub fn inner_product_2d(a: &Field2D, b: &Field2D) -> Result<Complex64> {
    if !a.grid_s.same_as(&b.grid_s) || !a.grid_i.same_as(&b.grid_i) {
        return Err(TfmError::Shape("inner product of 2-D fields on different grids".into()));
    }
    let sum: Complex64 = a.values.iter().zip(b.values.iter()).map(|(x, y)| x.conj() * y).sum();
    Ok(sum * a.cell_area())
}
