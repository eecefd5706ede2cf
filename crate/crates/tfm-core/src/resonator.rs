//! Coupled-mode model of the M-stage ring chain and the MZI point-coupler equivalence.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TfmError};
use crate::spectral_core::{AngularFrequency, Field1D, Rate, SpectralGrid, SqrtRate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResonanceLabel {
    Idler,
    Pump,
    Signal,
}

/// One resonance of the source: a bus-coupled main ring followed by a linear chain of
/// auxiliary rings. Stage 1 is the main ring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceChain {
    pub label: ResonanceLabel,
    pub frequency: AngularFrequency,
    pub decay_rates: Vec<Rate>,
    pub kappa: SqrtRate,
    pub couplings: Vec<Rate>,
    pub perimeter_m: f64,
    pub group_velocity: f64,
}

impl ResonanceChain {
    pub fn validate(&self) -> Result<()> {
        let m = self.decay_rates.len();
        if m == 0 {
            return Err(TfmError::Domain(format!("{:?} chain has no stages", self.label)));
        }
        if self.couplings.len() + 1 != m {
            return Err(TfmError::Domain(format!(
                "{:?} chain: {} stages need {} inter-stage couplings, got {}",
                self.label,
                m,
                m - 1,
                self.couplings.len()
            )));
        }
        if self.decay_rates.iter().any(|r| !(r.rad_per_s() > 0.0)) {
            return Err(TfmError::Domain(format!("{:?} chain: decay rates must be positive", self.label)));
        }
        if self.couplings.iter().any(|r| !(r.rad_per_s() >= 0.0)) {
            return Err(TfmError::Domain(format!("{:?} chain: couplings must be non-negative", self.label)));
        }
        if !(self.kappa.sqrt_per_s() > 0.0) {
            return Err(TfmError::Domain(format!("{:?} chain: kappa must be positive", self.label)));
        }
        if !(self.perimeter_m > 0.0) || !(self.group_velocity > 0.0) {
            return Err(TfmError::Domain(format!("{:?} chain: perimeter and group velocity must be positive", self.label)));
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.decay_rates.len()
    }

    /// sqrt(v_g / L_1): converts the energy-normalized amplitude a_1 to a power-flow amplitude.
    pub fn flow_factor(&self) -> f64 {
        (self.group_velocity / self.perimeter_m).sqrt()
    }

    /// Steady-state stage amplitudes a_m for unit input at angular frequency `omega`.
    pub fn stage_amplitudes(&self, omega: f64) -> Result<Vec<Complex64>> {
        let delta = omega - self.frequency.rad_per_s();
        let m = self.stages();
        let diag: Vec<Complex64> = self.decay_rates.iter().map(|g| Complex64::new(g.rad_per_s(), delta)).collect();
        let off: Vec<Complex64> = self.couplings.iter().map(|mu| Complex64::new(0.0, mu.rad_per_s())).collect();
        let mut rhs = vec![Complex64::new(0.0, 0.0); m];
        rhs[0] = Complex64::new(0.0, -self.kappa.sqrt_per_s());
        solve_symmetric_tridiagonal(&diag, &off, &rhs)
    }

    /// l_x at a single frequency.
    pub fn enhancement(&self, omega: f64) -> Result<Complex64> {
        Ok(self.flow_factor() * self.stage_amplitudes(omega)?[0])
    }

    /// S_t / S_i at a single frequency.
    pub fn transmission(&self, omega: f64) -> Result<Complex64> {
        let a1 = self.stage_amplitudes(omega)?[0];
        Ok(Complex64::new(1.0, 0.0) - Complex64::new(0.0, self.kappa.sqrt_per_s()) * a1)
    }

    /// Same chain with only the first `stages` rings.
    pub fn truncated(&self, stages: usize) -> Self {
        let stages = stages.clamp(1, self.stages());
        Self { decay_rates: self.decay_rates[..stages].to_vec(), couplings: self.couplings[..stages - 1].to_vec(), ..self.clone() }
    }

    pub fn with_frequency(&self, frequency: AngularFrequency) -> Self {
        Self { frequency, ..self.clone() }
    }

    pub fn with_couplings(&self, couplings: Vec<Rate>) -> Self {
        Self { couplings, ..self.clone() }
    }
}

/// Thomas elimination for a complex symmetric tridiagonal system. The chain matrix has a
/// positive-definite real part, so elimination without pivoting is stable.
fn solve_symmetric_tridiagonal(diag: &[Complex64], off: &[Complex64], rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = diag.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    let mut pivot = diag[0];
    for k in 0..n {
        if k > 0 {
            pivot = diag[k] - off[k - 1] * c[k - 1];
        }
        if pivot.norm() < 1e-300 || !pivot.re.is_finite() || !pivot.im.is_finite() {
            return Err(TfmError::Numeric(format!("singular coupled-mode system at stage {}", k + 1)));
        }
        if k + 1 < n {
            c[k] = off[k] / pivot;
        }
        d[k] = if k == 0 { rhs[0] / pivot } else { (rhs[k] - off[k - 1] * d[k - 1]) / pivot };
    }
    for k in (0..n.saturating_sub(1)).rev() {
        let next = d[k + 1];
        d[k] -= c[k] * next;
    }
    Ok(d)
}

/// Closed form of the two-stage enhancement.
pub fn field_enhancement_two_stage(chain: &ResonanceChain, grid: &SpectralGrid) -> Result<Field1D> {
    chain.validate()?;
    if chain.stages() != 2 {
        return Err(TfmError::Precondition(format!("two-stage form needs M = 2, got {}", chain.stages())));
    }
    let (g1, g2) = (chain.decay_rates[0].rad_per_s(), chain.decay_rates[1].rad_per_s());
    let mu = chain.couplings[0].rad_per_s();
    let kappa = chain.kappa.sqrt_per_s();
    let w0 = chain.frequency.rad_per_s();
    let pre = chain.flow_factor();
    Field1D::from_fn(*grid, |w| {
        let d = w - w0;
        let num = Complex64::new(d, -g2) * kappa;
        let den = Complex64::new(g1, d) * Complex64::new(g2, d) + mu * mu;
        pre * num / den
    })
}

pub fn field_enhancement_chain(chain: &ResonanceChain, grid: &SpectralGrid) -> Result<Field1D> {
    chain.validate()?;
    let values = grid.points().into_iter().map(|w| chain.enhancement(w)).collect::<Result<Vec<_>>>()?;
    Field1D::new(*grid, values)
}

pub fn bus_transmission(chain: &ResonanceChain, grid: &SpectralGrid) -> Result<Field1D> {
    chain.validate()?;
    let values = grid.points().into_iter().map(|w| chain.transmission(w)).collect::<Result<Vec<_>>>()?;
    Field1D::new(*grid, values)
}

/// Ring radius from the perimeter of a circular ring.
pub fn radius_from_perimeter(perimeter_m: f64) -> f64 {
    perimeter_m / TAU
}

/// Perimeter from the group velocity and the angular resonance spacing (FSR).
pub fn perimeter_from_spacing(group_velocity: f64, spacing: AngularFrequency) -> Result<f64> {
    if !(spacing.rad_per_s() > 0.0) {
        return Err(TfmError::Domain(format!("resonance spacing must be positive, got {spacing}")));
    }
    Ok(group_velocity * TAU / spacing.rad_per_s())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MziPhases {
    pub upper_arm: f64,
    pub lower_arm: f64,
    pub output: f64,
}

/// Geometry shared by the two rings that the MZI couples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MziGeometry {
    pub main_perimeter_m: f64,
    pub aux_perimeter_m: f64,
    pub group_velocity: f64,
}

impl MziGeometry {
    /// sqrt(v_g^2 / (L_1 L_2)).
    pub fn rate_scale(&self) -> f64 {
        self.group_velocity / (self.main_perimeter_m * self.aux_perimeter_m).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MziCoupler {
    pub splitter: f64,
    pub phases: MziPhases,
    pub geometry: MziGeometry,
}

type Mat2 = [[Complex64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

fn check_splitter(k: f64) -> Result<()> {
    if !(k > 0.0 && k < 1.0) {
        return Err(TfmError::Domain(format!("splitter power coupling {k} outside (0, 1)")));
    }
    Ok(())
}

/// Full 2x2 transfer matrix: coupler, arm phases, coupler, output phase on port 1.
pub fn mzi_transfer(coupler: &MziCoupler) -> Result<Mat2> {
    check_splitter(coupler.splitter)?;
    let bar = Complex64::new((1.0 - coupler.splitter).sqrt(), 0.0);
    let cross = Complex64::new(0.0, -coupler.splitter.sqrt());
    let split = [[bar, cross], [cross, bar]];
    let zero = Complex64::new(0.0, 0.0);
    let p = coupler.phases;
    let arms = [[Complex64::from_polar(1.0, p.upper_arm), zero], [zero, Complex64::from_polar(1.0, p.lower_arm)]];
    let out = [[Complex64::from_polar(1.0, p.output), zero], [zero, Complex64::new(1.0, 0.0)]];
    Ok(mat_mul(&out, &mat_mul(&split, &mat_mul(&arms, &split))))
}

/// Effective power cross-coupling k_12 = |cross element|^2.
pub fn mzi_cross_coupling(coupler: &MziCoupler) -> Result<f64> {
    Ok(mzi_transfer(coupler)?[0][1].norm_sqr())
}

pub fn mzi_effective_mu(coupler: &MziCoupler) -> Result<Rate> {
    let k12 = mzi_cross_coupling(coupler)?;
    Ok(Rate::from_rad_per_s(k12 * coupler.geometry.rate_scale()))
}

/// Largest mu reachable with a given splitter (arms in phase).
pub fn mzi_max_mu(splitter: f64, geometry: &MziGeometry) -> Result<Rate> {
    check_splitter(splitter)?;
    Ok(Rate::from_rad_per_s(4.0 * splitter * (1.0 - splitter) * geometry.rate_scale()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MziSetting {
    pub phases: MziPhases,
    /// |d(arm phase difference)/d mu| in rad per (rad/s).
    pub finesse: f64,
}

fn arm_difference_for(k12: f64, splitter: f64) -> f64 {
    let ratio = (k12 / (4.0 * splitter * (1.0 - splitter))).clamp(0.0, 1.0);
    2.0 * ratio.sqrt().acos()
}

/// Inverse map on the branch where the arm difference lies in [0, pi]. Convention: lower arm
/// fixed at 0, output phase cancels the common phase of the cross port.
pub fn mzi_phase_for_mu(splitter: f64, geometry: &MziGeometry, target: Rate) -> Result<MziSetting> {
    let max = mzi_max_mu(splitter, geometry)?;
    let mu = target.rad_per_s();
    if mu < 0.0 || mu > max.rad_per_s() * (1.0 + 1e-12) {
        return Err(TfmError::OutOfRange(format!("mu {} GHz outside achievable range [0, {}] GHz", target.ghz(), max.ghz())));
    }
    let scale = geometry.rate_scale();
    let phase_of = |m: f64| arm_difference_for(m / scale, splitter);
    let diff = phase_of(mu);
    let h = 1e-6 * max.rad_per_s();
    let (lo, hi) = ((mu - h).max(0.0), (mu + h).min(max.rad_per_s()));
    let finesse = ((phase_of(hi) - phase_of(lo)) / (hi - lo)).abs();
    Ok(MziSetting { phases: MziPhases { upper_arm: diff, lower_arm: 0.0, output: -diff / 2.0 }, finesse })
}

/// Degrees of arm phase per GHz of mu, the practical tuning-resolution figure.
pub fn finesse_deg_per_ghz(setting: &MziSetting) -> f64 {
    setting.finesse * 1e9 * 180.0 / PI
}
