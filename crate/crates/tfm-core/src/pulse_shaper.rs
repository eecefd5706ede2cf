//! N-tap FIR pump shaper.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TfmError};
use crate::spectral_core::{gaussian_envelope, AngularFrequency, Field1D, SpectralGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub amplitude: f64,
    pub phase: f64,
}

impl Tap {
    pub fn new(amplitude: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&amplitude) {
            return Err(TfmError::Domain(format!("tap amplitude {amplitude} outside [0, 1]")));
        }
        if !phase.is_finite() {
            return Err(TfmError::Domain("tap phase must be finite".into()));
        }
        Ok(Self { amplitude, phase })
    }

    /// Phase wrapped to [0, 2pi) for reporting.
    pub fn wrapped_phase(&self) -> f64 {
        self.phase.rem_euclid(std::f64::consts::TAU)
    }
}

/// Gaussian pump envelope followed by the delay-line shaper.
///
/// Tap `n` (1-based) contributes `a_n exp(i(phi_n - n((w - carrier) tau + reference_phase)))`.
/// `reference_phase` is the optical phase the base delay imprints at the carrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub sigma_p: AngularFrequency,
    pub carrier: AngularFrequency,
    pub taps: Vec<Tap>,
    pub delay_s: f64,
    pub reference_phase: f64,
}

impl PumpSpec {
    pub fn new(sigma_p: AngularFrequency, carrier: AngularFrequency, taps: Vec<Tap>, delay_s: f64, reference_phase: f64) -> Result<Self> {
        let spec = Self { sigma_p, carrier, taps, delay_s, reference_phase };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_p.rad_per_s() > 0.0) {
            return Err(TfmError::Domain(format!("sigma_p must be positive, got {}", self.sigma_p)));
        }
        if self.taps.is_empty() {
            return Err(TfmError::Domain("pump shaper needs at least one tap".into()));
        }
        if !(self.delay_s > 0.0) {
            return Err(TfmError::Domain(format!("tap delay must be positive, got {} s", self.delay_s)));
        }
        if self.taps.iter().any(|t| !(0.0..=1.0).contains(&t.amplitude) || !t.phase.is_finite()) {
            return Err(TfmError::Domain("tap amplitudes must lie in [0, 1] with finite phases".into()));
        }
        if self.taps.iter().all(|t| t.amplitude == 0.0) {
            return Err(TfmError::Degenerate("all tap amplitudes are zero".into()));
        }
        Ok(())
    }

    pub fn amplitude_sum(&self) -> f64 {
        self.taps.iter().map(|t| t.amplitude).sum()
    }

    /// H at a single angular frequency.
    pub fn transfer(&self, omega: f64) -> Complex64 {
        let y = (omega - self.carrier.rad_per_s()) * self.delay_s + self.reference_phase;
        fir_sum(&self.taps, y)
    }
}

/// Sum over taps of a_n exp(i(phi_n - n y)).
pub(crate) fn fir_sum(taps: &[Tap], y: f64) -> Complex64 {
    taps.iter().enumerate().map(|(k, t)| Complex64::from_polar(t.amplitude, t.phase - (k + 1) as f64 * y)).sum()
}

pub fn fir_response(spec: &PumpSpec, grid: &SpectralGrid) -> Result<Field1D> {
    spec.validate()?;
    Field1D::from_fn(*grid, |w| spec.transfer(w))
}

/// alpha_p = alpha_0 * H on the grid.
pub fn shaped_pump(spec: &PumpSpec, grid: &SpectralGrid) -> Result<Field1D> {
    let envelope = gaussian_envelope(grid, spec.carrier, spec.sigma_p)?;
    envelope.pointwise(&fir_response(spec, grid)?)
}
