//! Assembled device and the forward simulation from pump shaper to analysis report.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    density_matrix, external_quality_factor, fidelity, higher_order_weight, nonlinear_parameter, pair_generation_rate, project_to_tfm,
    pulse_energy, purity, schmidt_number, schmidt_pair_state, schmidt_weights, total_quality_factor, PgrInput, TargetState, PAIR_BASIS,
};
use crate::error::{Result, TfmError};
use crate::inversion::{FixedParams, MuAxis};
use crate::jsa_engine::{compute_jsa, impose_pi_phase, Jsa, JsaInputs, JsaPath, MinimumRule, PhaseMode};
use crate::phase_matching::DispersionModel;
use crate::pulse_shaper::{fir_response, shaped_pump, PumpSpec};
use crate::resonator::{bus_transmission, field_enhancement_chain, radius_from_perimeter, ResonanceChain};
use crate::spectral_core::{AngularFrequency, Field1D, SpectralGrid};

/// Where the pump resonance sits in the JSA model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PumpResonance {
    /// Centred midway between signal and idler (equally spaced comb).
    #[default]
    EnergyMatched,
    /// At the configured pump resonance frequency.
    AsSpecified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub half_span: Option<AngularFrequency>,
    /// Half span in units of the target bandwidth when `half_span` is absent.
    pub span_sigmas: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 512, half_span: None, span_sigmas: 8.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub rule: MinimumRule,
    pub phase_mode: PhaseMode,
    pub path: JsaPath,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { rule: MinimumRule::default(), phase_mode: PhaseMode::Magnitude, path: JsaPath::Auto }
    }
}

/// Inputs for the pair generation rate beyond the resonator itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceOptics {
    /// Kerr index n2 in m^2/W.
    pub n2: f64,
    pub effective_area_m2: f64,
    pub average_power_w: f64,
    pub rep_rate_hz: f64,
}

impl Default for SourceOptics {
    fn default() -> Self {
        Self { n2: 5.59e-18, effective_area_m2: 0.191e-12, average_power_w: 1e-3, rep_rate_hz: 500e6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Device {
    pub pump: PumpSpec,
    pub signal: ResonanceChain,
    pub idler: ResonanceChain,
    pub pump_resonance: ResonanceChain,
    pub pump_alignment: PumpResonance,
    pub dispersion: DispersionModel,
    pub target: Option<TargetState>,
    pub grid: GridSpec,
    pub analysis: AnalysisOptions,
    pub optics: SourceOptics,
}

/// The three sampling grids sharing one spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceGrids {
    pub pump: SpectralGrid,
    pub signal: SpectralGrid,
    pub idler: SpectralGrid,
}

impl Device {
    pub fn validate(&self) -> Result<()> {
        self.pump.validate()?;
        for chain in [&self.signal, &self.idler, &self.pump_resonance] {
            chain.validate()?;
        }
        if let Some(t) = &self.target {
            t.validate()?;
        }
        if self.grid.points < 8 {
            return Err(TfmError::Config("grid.points must be at least 8".into()));
        }
        Ok(())
    }

    pub fn pump_center(&self) -> AngularFrequency {
        AngularFrequency::from_rad_per_s(0.5 * (self.signal.frequency.rad_per_s() + self.idler.frequency.rad_per_s()))
    }

    pub fn half_span(&self) -> Result<AngularFrequency> {
        match (self.grid.half_span, &self.target) {
            (Some(h), _) => Ok(h),
            (None, Some(t)) => Ok(t.sigma * self.grid.span_sigmas),
            (None, None) => Err(TfmError::Config("grid.half_span is required when no target state is given".into())),
        }
    }

    pub fn grids(&self) -> Result<DeviceGrids> {
        let pump = SpectralGrid::new(self.pump_center(), self.half_span()?, self.grid.points)?;
        Ok(DeviceGrids { pump, signal: pump.recentered(self.signal.frequency), idler: pump.recentered(self.idler.frequency) })
    }

    /// Pump chain as used by the JSA model.
    pub fn effective_pump_resonance(&self) -> ResonanceChain {
        match self.pump_alignment {
            PumpResonance::EnergyMatched => self.pump_resonance.with_frequency(self.pump_center()),
            PumpResonance::AsSpecified => self.pump_resonance.clone(),
        }
    }

    pub fn fixed_params(&self) -> Result<FixedParams> {
        Ok(FixedParams {
            signal: self.signal.clone(),
            idler: self.idler.clone(),
            pump: self.effective_pump_resonance(),
            n_taps: self.pump.taps.len(),
            delay_s: self.pump.delay_s,
            grid_points: self.grid.points,
            half_span: self.half_span()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectra {
    pub fir: Field1D,
    pub shaped_pump: Field1D,
    pub pump_enhancement: Field1D,
    pub signal_enhancement: Field1D,
    pub idler_enhancement: Field1D,
    pub pump_transmission: Field1D,
    pub signal_transmission: Field1D,
    pub idler_transmission: Field1D,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PgrReport {
    pub pairs_per_pulse: f64,
    pub pgr_hz: f64,
    pub q_tot: f64,
    pub q_ext: f64,
    pub gamma: f64,
    pub pulse_energy: f64,
    pub radius_m: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub lambda: Vec<f64>,
    pub k_prime: f64,
    pub purity: f64,
    pub higher_order_weight: f64,
    /// Schmidt pair-basis fidelity to the target.
    pub fidelity: Option<f64>,
    /// Fidelity of the Hermite-Gaussian product-basis projection.
    pub hg_fidelity: Option<f64>,
    pub subspace_weight: Option<f64>,
    pub c_kl: Option<DMatrix<Complex64>>,
    /// Sum-frequency offsets (rad/s) of the minima that received a pi phase.
    pub pi_phase_minima: Vec<f64>,
    pub pgr: PgrReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub raw: Jsa,
    pub jsa: Jsa,
    pub spectra: Spectra,
    pub report: AnalysisReport,
}

pub fn estimate_pgr(device: &Device, average_power_w: f64, rep_rate_hz: f64) -> Result<PgrReport> {
    let chain = &device.pump_resonance;
    chain.validate()?;
    let w = chain.frequency;
    let gamma = nonlinear_parameter(device.optics.n2, w, device.optics.effective_area_m2);
    let energy = pulse_energy(average_power_w, rep_rate_hz);
    let q_tot = total_quality_factor(w, &chain.decay_rates);
    let q_ext = external_quality_factor(w, chain.kappa);
    let radius_m = radius_from_perimeter(chain.perimeter_m);
    let est = pair_generation_rate(&PgrInput {
        gamma,
        pulse_energy_j: energy,
        group_velocity: chain.group_velocity,
        radius_m,
        pump_frequency: w,
        q_total: q_tot,
        q_external: q_ext,
        rep_rate_hz,
    })?;
    Ok(PgrReport { pairs_per_pulse: est.pairs_per_pulse, pgr_hz: est.pgr_hz, q_tot, q_ext, gamma, pulse_energy: energy, radius_m })
}

pub fn spectra(device: &Device, grids: &DeviceGrids) -> Result<Spectra> {
    let pump_chain = device.effective_pump_resonance();
    Ok(Spectra {
        fir: fir_response(&device.pump, &grids.pump)?,
        shaped_pump: shaped_pump(&device.pump, &grids.pump)?,
        pump_enhancement: field_enhancement_chain(&pump_chain, &grids.pump)?,
        signal_enhancement: field_enhancement_chain(&device.signal, &grids.signal)?,
        idler_enhancement: field_enhancement_chain(&device.idler, &grids.idler)?,
        pump_transmission: bus_transmission(&pump_chain, &grids.pump)?,
        signal_transmission: bus_transmission(&device.signal, &grids.signal)?,
        idler_transmission: bus_transmission(&device.idler, &grids.idler)?,
    })
}

/// Full forward pass: spectra, JSA, pi-phase imposition, Schmidt analysis, fidelity, PGR.
pub fn simulate(device: &Device) -> Result<Simulation> {
    device.validate()?;
    let grids = device.grids()?;
    let spectra = spectra(device, &grids)?;
    let raw = compute_jsa(&JsaInputs {
        pump: &spectra.shaped_pump,
        pump_enhancement: &spectra.pump_enhancement,
        signal_enhancement: &spectra.signal_enhancement,
        idler_enhancement: &spectra.idler_enhancement,
        dispersion: &device.dispersion,
        path: device.analysis.path,
    })?;
    let imposed = impose_pi_phase(&raw, &device.analysis.rule, device.analysis.phase_mode)?;
    let weights = schmidt_weights(&imposed.jsa)?;
    let sum_grid = grids.signal.sum_grid(&grids.idler)?;
    let pi_phase_minima = imposed.boundaries.iter().map(|&b| sum_grid.detuning(0) + b * sum_grid.spacing()).collect();
    let (fid, hg_fid, weight, c_kl) = match &device.target {
        Some(t) => {
            let target = TargetState { center_s: grids.signal.center(), center_i: grids.idler.center(), ..t.clone() };
            let ideal = density_matrix(&target.ideal_vector(PAIR_BASIS));
            let pair = schmidt_pair_state(&weights, &target, PAIR_BASIS)?;
            let proj = project_to_tfm(&imposed.jsa, target.sigma, PAIR_BASIS)?;
            (
                Some(fidelity(&density_matrix(&pair), &ideal)?),
                Some(fidelity(&density_matrix(&proj.state), &ideal)?),
                Some(proj.subspace_weight),
                Some(proj.amplitudes),
            )
        }
        None => (None, None, None, None),
    };
    let report = AnalysisReport {
        k_prime: schmidt_number(&weights)?,
        purity: purity(&weights)?,
        higher_order_weight: higher_order_weight(&weights, PAIR_BASIS),
        lambda: weights.iter().take(32).cloned().collect(),
        fidelity: fid,
        hg_fidelity: hg_fid,
        subspace_weight: weight,
        c_kl,
        pi_phase_minima,
        pgr: estimate_pgr(device, device.optics.average_power_w, device.optics.rep_rate_hz)?,
    };
    Ok(Simulation { raw, jsa: imposed.jsa, spectra, report })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PuritySample {
    pub mu: AngularFrequency,
    pub purity: f64,
}

/// Spectral purity as a function of the pump-resonance coupling mu_12.
pub fn sweep_pump_coupling(device: &Device, axis: &MuAxis) -> Result<Vec<PuritySample>> {
    if device.pump_resonance.stages() < 2 {
        return Err(TfmError::Config("pump coupling sweep needs a pump chain with at least two stages".into()));
    }
    axis.values()?
        .into_iter()
        .map(|mu| {
            let mut d = device.clone();
            d.pump_resonance.couplings[0] = mu;
            let sim = simulate(&d)?;
            Ok(PuritySample { mu, purity: sim.report.purity })
        })
        .collect()
}
