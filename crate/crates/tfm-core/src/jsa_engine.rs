//! Joint spectral amplitude assembly: ADP self-convolution, TDSI filter, phase matching,
//! pi-phase imposition along the sum-frequency axis.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TfmError};
use crate::phase_matching::{CenterOffsets, DispersionModel, MixingPoint};
use crate::spectral_core::{Field1D, Field2D, SpectralGrid};

/// Complex profile over the sum frequency w_s + w_i.
#[derive(Clone, Debug, PartialEq)]
pub struct AdpProfile {
    pub grid: SpectralGrid,
    pub values: Vec<Complex64>,
    /// Input was not negligible at the grid edges, so the convolution is truncated.
    pub truncated: bool,
}

/// FFT-based linear self-convolution for a fixed input length.
#[derive(Clone)]
pub struct SelfConvolver {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SelfConvolver {
    pub fn new(n: usize) -> Self {
        let len = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    /// (a * a)[m] = sum_q a[q] a[m - q], m = 0..2n-1.
    pub fn convolve(&self, a: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(a.len(), self.n);
        let len = self.forward.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        buf[..a.len()].copy_from_slice(a);
        self.forward.process(&mut buf);
        for v in buf.iter_mut() {
            *v = *v * *v;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / len as f64;
        buf.truncate(2 * self.n - 1);
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }
}

pub const EDGE_THRESHOLD: f64 = 1e-4;

/// ADP = (alpha_p l_p) * (alpha_p l_p) with rectangle-rule weight.
pub fn compute_adp(pump_times_lp: &Field1D) -> Result<AdpProfile> {
    let grid = pump_times_lp.grid.sum_grid(&pump_times_lp.grid)?;
    let a = &pump_times_lp.values;
    let peak = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(TfmError::Degenerate("pump field is identically zero".into()));
    }
    let edge = a[0].norm().max(a[a.len() - 1].norm());
    let dx = pump_times_lp.grid.spacing();
    let values = SelfConvolver::new(a.len()).convolve(a).into_iter().map(|v| v * dx).collect();
    Ok(AdpProfile { grid, values, truncated: edge > EDGE_THRESHOLD * peak })
}

/// TDSI = l_s(w_s) l_i(w_i), rank one.
pub fn compute_tdsi(l_s: &Field1D, l_i: &Field1D) -> Field2D {
    let values = DMatrix::from_fn(l_s.values.len(), l_i.values.len(), |j, k| l_s.values[j] * l_i.values[k]);
    Field2D { grid_s: l_s.grid, grid_i: l_i.grid, values }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jsa {
    pub grid_s: SpectralGrid,
    pub grid_i: SpectralGrid,
    /// Rows: signal samples. Columns: idler samples.
    pub amplitude: DMatrix<Complex64>,
    pub normalized: bool,
}

impl Jsa {
    pub fn new(grid_s: SpectralGrid, grid_i: SpectralGrid, amplitude: DMatrix<Complex64>) -> Result<Self> {
        Field2D::new(grid_s, grid_i, amplitude.clone())?;
        if amplitude.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(TfmError::Numeric("non-finite JSA entry".into()));
        }
        Ok(Self { grid_s, grid_i, amplitude, normalized: false })
    }

    pub fn cell_area(&self) -> f64 {
        self.grid_s.spacing() * self.grid_i.spacing()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitude.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_area()
    }

    pub fn as_field(&self) -> Field2D {
        Field2D { grid_s: self.grid_s, grid_i: self.grid_i, values: self.amplitude.clone() }
    }

    pub fn from_field(field: Field2D) -> Result<Self> {
        Self::new(field.grid_s, field.grid_i, field.values)
    }

    pub fn is_real(&self) -> bool {
        self.amplitude.iter().all(|v| v.im == 0.0)
    }

    /// |F| along the diagonal cut w_s - w_s0 = w_i - w_i0 (requires square grids).
    pub fn diagonal_profile(&self) -> Result<Vec<f64>> {
        self.check_square()?;
        Ok((0..self.grid_s.len()).map(|j| self.amplitude[(j, j)].norm()).collect())
    }

    fn check_square(&self) -> Result<()> {
        if self.grid_s.len() != self.grid_i.len() {
            return Err(TfmError::Shape("signal and idler grids differ in size".into()));
        }
        self.grid_s.check_spacing(&self.grid_i)
    }
}

pub fn normalize(jsa: &Jsa) -> Result<Jsa> {
    let n = jsa.norm_sqr();
    if !(n > 0.0) || !n.is_finite() {
        return Err(TfmError::Degenerate("cannot normalize a zero JSA".into()));
    }
    let scale = 1.0 / n.sqrt();
    Ok(Jsa { amplitude: jsa.amplitude.map(|v| v * scale), normalized: true, ..jsa.clone() })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JsaPath {
    /// Factorized when the phase matching ignores the pump argument, quadrature otherwise.
    #[default]
    Auto,
    Factorized,
    Quadrature,
}

pub struct JsaInputs<'a> {
    /// Shaped pump alpha_p on the pump grid.
    pub pump: &'a Field1D,
    pub pump_enhancement: &'a Field1D,
    pub signal_enhancement: &'a Field1D,
    pub idler_enhancement: &'a Field1D,
    pub dispersion: &'a DispersionModel,
    pub path: JsaPath,
}

impl JsaInputs<'_> {
    fn check(&self) -> Result<CenterOffsets> {
        let (p, s, i) = (&self.pump.grid, &self.signal_enhancement.grid, &self.idler_enhancement.grid);
        if !self.pump_enhancement.grid.same_as(p) {
            return Err(TfmError::Shape("pump and pump enhancement grids differ".into()));
        }
        if p.len() != s.len() || s.len() != i.len() {
            return Err(TfmError::Shape("pump, signal and idler grids must have equal size".into()));
        }
        p.check_spacing(s)?;
        p.check_spacing(i)?;
        let mid = 0.5 * (s.center().rad_per_s() + i.center().rad_per_s());
        if (mid - p.center().rad_per_s()).abs() > 1e-6 * p.spacing() {
            return Err(TfmError::Shape("pump grid must be centred midway between signal and idler".into()));
        }
        Ok(CenterOffsets {
            signal: s.center().rad_per_s() - p.center().rad_per_s(),
            idler: i.center().rad_per_s() - p.center().rad_per_s(),
        })
    }
}

/// Normalized JSA. Sample (j, k) has sum-frequency index j + k on the ADP grid.
pub fn compute_jsa(inputs: &JsaInputs) -> Result<Jsa> {
    let offsets = inputs.check()?;
    let a = inputs.pump.pointwise(inputs.pump_enhancement)?;
    let factorized = match inputs.path {
        JsaPath::Auto => inputs.dispersion.is_pump_independent(),
        JsaPath::Factorized => {
            if !inputs.dispersion.is_pump_independent() {
                return Err(TfmError::Precondition("factorized path needs pump-independent phase matching".into()));
            }
            true
        }
        JsaPath::Quadrature => false,
    };
    let (gs, gi) = (inputs.signal_enhancement.grid, inputs.idler_enhancement.grid);
    let (ls, li) = (&inputs.signal_enhancement.values, &inputs.idler_enhancement.values);
    let n = gs.len();
    let amplitude = if factorized {
        let adp = compute_adp(&a)?;
        DMatrix::from_fn(n, n, |j, k| {
            let at = MixingPoint { pump: 0.0, signal: gs.detuning(j), idler: gi.detuning(k) };
            adp.values[j + k] * inputs.dispersion.pmf(at, offsets) * ls[j] * li[k]
        })
    } else {
        let dx = a.grid.spacing();
        let pg = a.grid;
        let columns: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                (0..n)
                    .map(|j| {
                        let m = j + k;
                        let lo = m.saturating_sub(n - 1);
                        let hi = m.min(n - 1);
                        let mut acc = Complex64::new(0.0, 0.0);
                        for q in lo..=hi {
                            let at = MixingPoint { pump: pg.detuning(q), signal: gs.detuning(j), idler: gi.detuning(k) };
                            acc += a.values[q] * a.values[m - q] * inputs.dispersion.pmf(at, offsets);
                        }
                        acc * dx * ls[j] * li[k]
                    })
                    .collect()
            })
            .collect();
        DMatrix::from_fn(n, n, |j, k| columns[k][j])
    };
    normalize(&Jsa::new(gs, gi, amplitude)?)
}

/// Prominence rule for the minima that receive a pi phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimumRule {
    /// A minimum must be below `threshold` x the smaller of its neighbouring maxima.
    pub threshold: f64,
    /// Both neighbouring maxima must exceed `floor` x the profile maximum.
    pub floor: f64,
}

impl Default for MinimumRule {
    fn default() -> Self {
        Self { threshold: 0.7, floor: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    /// Keep |F| and apply the sign pattern (residual spectral phase discarded).
    #[default]
    Magnitude,
    /// Multiply the complex F by the sign pattern.
    Preserve,
}

/// Interior minima of a profile that pass the prominence rule.
pub fn find_minima(profile: &[f64], rule: &MinimumRule) -> Vec<usize> {
    let n = profile.len();
    if n < 3 {
        return Vec::new();
    }
    let top = profile.iter().cloned().fold(0.0, f64::max);
    let maxima: Vec<usize> = (1..n - 1).filter(|&k| profile[k] >= profile[k - 1] && profile[k] > profile[k + 1]).collect();
    (1..n - 1)
        .filter(|&k| profile[k] < profile[k - 1] && profile[k] <= profile[k + 1])
        .filter(|&k| {
            let left = maxima.iter().rev().find(|&&m| m < k);
            let right = maxima.iter().find(|&&m| m > k);
            match (left, right) {
                (Some(&l), Some(&r)) => {
                    let shoulder = profile[l].min(profile[r]);
                    profile[k] < rule.threshold * shoulder && shoulder > rule.floor * top
                }
                _ => false,
            }
        })
        .collect()
}

/// Sub-sample position of a sampled minimum of a magnitude profile, from a parabola through
/// the squared magnitudes (smooth even where the magnitude has a cusp near zero).
pub fn refine_minimum(profile: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= profile.len() {
        return k as f64;
    }
    let (l, c, r) = (profile[k - 1].powi(2), profile[k].powi(2), profile[k + 1].powi(2));
    let curvature = l - 2.0 * c + r;
    if curvature > 0.0 {
        k as f64 + (0.5 * (l - r) / curvature).clamp(-0.5, 0.5)
    } else {
        k as f64
    }
}

/// Sign per sum-frequency index, flipping across each boundary (given in sum-index units).
/// The node whose cell straddles a boundary takes the cell average of the step, so the
/// pattern does not snap to the grid.
pub fn sum_frequency_signs(n_sum: usize, boundaries: &[f64]) -> Vec<f64> {
    (0..n_sum).map(|u| boundaries.iter().map(|&b| (2.0 * (b - u as f64)).clamp(-1.0, 1.0)).product()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseImposition {
    pub jsa: Jsa,
    /// Diagonal indices of the minima that triggered a flip.
    pub minima: Vec<usize>,
    /// Refined flip positions in sum-frequency index units (diagonal index m maps to 2m).
    pub boundaries: Vec<f64>,
}

pub fn apply_sign_pattern(jsa: &Jsa, boundaries: &[f64], mode: PhaseMode) -> Result<Jsa> {
    jsa.check_square()?;
    let n = jsa.grid_s.len();
    let signs = sum_frequency_signs(2 * n - 1, boundaries);
    let amplitude = DMatrix::from_fn(n, n, |j, k| {
        let v = jsa.amplitude[(j, k)];
        let base = match mode {
            PhaseMode::Magnitude => Complex64::new(v.norm(), 0.0),
            PhaseMode::Preserve => v,
        };
        base * signs[j + k]
    });
    Ok(Jsa { amplitude, ..jsa.clone() })
}

pub fn impose_pi_phase(jsa: &Jsa, rule: &MinimumRule, mode: PhaseMode) -> Result<PhaseImposition> {
    let profile = jsa.diagonal_profile()?;
    let minima = find_minima(&profile, rule);
    let boundaries: Vec<f64> = minima.iter().map(|&m| 2.0 * refine_minimum(&profile, m)).collect();
    let mut out = apply_sign_pattern(jsa, &boundaries, mode)?;
    if jsa.normalized && !boundaries.is_empty() {
        out = normalize(&out)?;
    }
    Ok(PhaseImposition { jsa: out, minima, boundaries })
}
