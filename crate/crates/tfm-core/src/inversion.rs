//! Inverse design: from a target state back to pump-shaper taps, pump bandwidth and
//! inter-ring couplings.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{density_matrix, fidelity, schmidt_number, schmidt_pair_state, schmidt_weights, target_jsa, TargetState, PAIR_BASIS};
use crate::error::{Result, TfmError};
use crate::jsa_engine::{compute_tdsi, impose_pi_phase, normalize, AdpProfile, Jsa, MinimumRule, PhaseMode, SelfConvolver};
use crate::pulse_shaper::Tap;
use crate::resonator::{field_enhancement_chain, ResonanceChain};
use crate::spectral_core::{AngularFrequency, Field1D, Field2D, Rate, SpectralGrid};

/// G = F conj(T) / (|T|^2 + eps^2 max|T|^2).
pub fn decouple_tdsi(target: &Field2D, tdsi: &Field2D, eps: f64) -> Result<Field2D> {
    if !target.grid_s.same_as(&tdsi.grid_s) || !target.grid_i.same_as(&tdsi.grid_i) {
        return Err(TfmError::Shape("target and TDSI grids differ".into()));
    }
    if !(eps >= 0.0) {
        return Err(TfmError::Domain(format!("regularization must be non-negative, got {eps}")));
    }
    let peak = tdsi.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let floor = eps * eps * peak;
    let mut values = target.values.clone();
    for (g, t) in values.iter_mut().zip(tdsi.values.iter()) {
        let den = t.norm_sqr() + floor;
        if den == 0.0 {
            return Err(TfmError::Numeric("TDSI vanishes and no regularization is set".into()));
        }
        *g = *g * t.conj() / den;
    }
    Field2D::new(target.grid_s, target.grid_i, values)
}

/// Diagonal cut G(w_s0 + u/2, w_i0 + u/2), indexed by the sum-frequency offset u on the
/// grid's own spacing. Odd sum indices fall between nodes and are interpolated bilinearly.
pub fn extract_antidiagonal(g: &Field2D) -> Result<AdpProfile> {
    if g.grid_s.len() != g.grid_i.len() {
        return Err(TfmError::Shape("diagonal cut needs equally sized grids".into()));
    }
    let grid = g.grid_s.sum_grid(&g.grid_i)?;
    let n = g.grid_s.len();
    let v = &g.values;
    let values = (0..2 * n - 1)
        .map(|m| {
            let t = m / 2;
            if m % 2 == 0 {
                v[(t, t)]
            } else {
                (v[(t, t)] + v[(t + 1, t)] + v[(t, t + 1)] + v[(t + 1, t + 1)]) * 0.25
            }
        })
        .collect();
    Ok(AdpProfile { grid, values, truncated: false })
}

/// Pump-side free parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpParams {
    pub sigma_p: AngularFrequency,
    pub taps: Vec<Tap>,
}

/// Forward ADP for trial pump parameters on a fixed pump grid and pump enhancement.
#[derive(Clone)]
pub struct AdpModel {
    grid: SpectralGrid,
    lp: Vec<Complex64>,
    delay_s: f64,
    reference_phase: f64,
    conv: SelfConvolver,
}

impl AdpModel {
    /// The pump grid must be centred on the pump carrier.
    pub fn new(lp: &Field1D, delay_s: f64, reference_phase: f64) -> Result<Self> {
        if !(delay_s > 0.0) {
            return Err(TfmError::Domain("tap delay must be positive".into()));
        }
        Ok(Self { grid: lp.grid, lp: lp.values.clone(), delay_s, reference_phase, conv: SelfConvolver::new(lp.values.len()) })
    }

    pub fn sum_grid(&self) -> Result<SpectralGrid> {
        self.grid.sum_grid(&self.grid)
    }

    /// alpha_0 H l_p on the pump grid.
    pub fn pump_field(&self, sigma_p: f64, taps: &[Tap]) -> Vec<Complex64> {
        let coeffs: Vec<Complex64> = taps.iter().map(|t| Complex64::from_polar(t.amplitude, t.phase)).collect();
        (0..self.grid.len())
            .map(|j| {
                let x = self.grid.detuning(j);
                let z = Complex64::from_polar(1.0, -(x * self.delay_s + self.reference_phase));
                let mut zn = z;
                let mut h = Complex64::new(0.0, 0.0);
                for c in &coeffs {
                    h += c * zn;
                    zn *= z;
                }
                let t = x / sigma_p;
                h * (-0.5 * t * t).exp() * self.lp[j]
            })
            .collect()
    }

    pub fn evaluate(&self, params: &PumpParams) -> Vec<Complex64> {
        let dx = self.grid.spacing();
        let a = self.pump_field(params.sigma_p.rad_per_s(), &params.taps);
        self.conv.convolve(&a).into_iter().map(|v| v * dx).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// Match |c ADP| to |profile| with a real scale c >= 0.
    #[default]
    Magnitude,
    /// Match c ADP to the complex profile with a complex scale c.
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub mode: FitMode,
    pub gradient_tol: f64,
    pub step_tol: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { mode: FitMode::Magnitude, gradient_tol: 1e-8, step_tol: 1e-10, max_iterations: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdpFit {
    pub params: PumpParams,
    pub scale: Complex64,
    /// ||c ADP - profile||^2 / ||profile||^2 in the chosen mode.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

struct LmOutcome {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Levenberg-Marquardt on sum r_i^2 with a forward-difference Jacobian.
fn levenberg_marquardt(f: &dyn Fn(&[f64]) -> Vec<f64>, x0: Vec<f64>, opts: &FitOptions) -> LmOutcome {
    let n = x0.len();
    let mut x = x0;
    let mut r = f(&x);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for c in 0..n {
            let h = 1e-7 * x[c].abs().max(1.0);
            let mut xp = x.clone();
            xp[c] += h;
            let rp = f(&xp);
            for k in 0..m {
                jac[(k, c)] = (rp[k] - r[k]) / h;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let grad = jac.transpose() * &rv;
        if grad.amax() < opts.gradient_tol {
            return LmOutcome { x, iterations, converged: true };
        }
        let jtj = jac.transpose() * &jac;
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        loop {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 4.0;
                    if lambda > 1e16 {
                        return LmOutcome { x, iterations, converged: false };
                    }
                    continue;
                }
            };
            let small = step.norm() < opts.step_tol * (xnorm + opts.step_tol);
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = f(&trial);
            let ct: f64 = rt.iter().map(|v| v * v).sum();
            if ct.is_finite() && ct < cost {
                x = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-15);
                if small {
                    return LmOutcome { x, iterations, converged: true };
                }
                break;
            }
            if small {
                return LmOutcome { x, iterations, converged: true };
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                return LmOutcome { x, iterations, converged: false };
            }
        }
    }
    LmOutcome { x, iterations, converged: false }
}

fn encode(p: &PumpParams) -> Vec<f64> {
    let mut x = vec![p.sigma_p.rad_per_s().ln()];
    x.extend(p.taps.iter().map(|t| t.amplitude.clamp(0.0, 1.0).sqrt().asin()));
    x.extend(p.taps.iter().map(|t| t.phase));
    x
}

fn decode(x: &[f64], n_taps: usize) -> PumpParams {
    let taps = (0..n_taps).map(|k| Tap { amplitude: x[1 + k].sin().powi(2), phase: x[1 + n_taps + k] }).collect();
    PumpParams { sigma_p: AngularFrequency::from_rad_per_s(x[0].exp()), taps }
}

/// Optimal scale and normalized residual vector of a model against a profile.
fn projected_residual(model: &[Complex64], profile: &[Complex64], norm: f64, mode: FitMode) -> (Complex64, Vec<f64>) {
    match mode {
        FitMode::Magnitude => {
            let (mut num, mut den) = (0.0, 0.0);
            for (m, g) in model.iter().zip(profile) {
                num += m.norm() * g.norm();
                den += m.norm_sqr();
            }
            let c = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
            let r = model.iter().zip(profile).map(|(m, g)| (c * m.norm() - g.norm()) / norm).collect();
            (Complex64::new(c, 0.0), r)
        }
        FitMode::Complex => {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for (m, g) in model.iter().zip(profile) {
                num += m.conj() * g;
                den += m.norm_sqr();
            }
            let c = if den > 0.0 { num / den } else { Complex64::new(0.0, 0.0) };
            let mut r = Vec::with_capacity(2 * model.len());
            for (m, g) in model.iter().zip(profile) {
                let d = (c * m - g) / norm;
                r.push(d.re);
                r.push(d.im);
            }
            (c, r)
        }
    }
}

/// Relative residual of given pump parameters against a profile.
pub fn adp_residual(profile: &AdpProfile, model: &AdpModel, params: &PumpParams, mode: FitMode) -> Result<(Complex64, f64)> {
    let norm = profile_norm(profile, model)?;
    let (c, r) = projected_residual(&model.evaluate(params), &profile.values, norm, mode);
    Ok((c, r.iter().map(|v| v * v).sum()))
}

fn profile_norm(profile: &AdpProfile, model: &AdpModel) -> Result<f64> {
    if profile.values.len() != 2 * model.grid.len() - 1 {
        return Err(TfmError::Shape(format!(
            "profile has {} samples, model sum grid has {}",
            profile.values.len(),
            2 * model.grid.len() - 1
        )));
    }
    let norm = profile.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(TfmError::Degenerate("profile is identically zero".into()));
    }
    Ok(norm)
}

/// Local least-squares fit of sigma_p and taps to a sum-frequency profile.
pub fn fit_adp(profile: &AdpProfile, model: &AdpModel, init: &PumpParams, opts: &FitOptions) -> Result<AdpFit> {
    let norm = profile_norm(profile, model)?;
    if init.taps.is_empty() || !(init.sigma_p.rad_per_s() > 0.0) {
        return Err(TfmError::Domain("initial guess needs taps and positive sigma_p".into()));
    }
    let n_taps = init.taps.len();
    let residuals = |x: &[f64]| projected_residual(&model.evaluate(&decode(x, n_taps)), &profile.values, norm, opts.mode).1;
    let out = levenberg_marquardt(&residuals, encode(init), opts);
    let params = decode(&out.x, n_taps);
    let (scale, r) = projected_residual(&model.evaluate(&params), &profile.values, norm, opts.mode);
    Ok(AdpFit { params, scale, residual: r.iter().map(|v| v * v).sum(), converged: out.converged, iterations: out.iterations })
}

/// Random initial pump parameters: phases U[0, 2pi), amplitudes U[0.1, 1], sigma_p
/// log-uniform over [0.5, 50] x 2pi GHz.
pub fn random_start<R: Rng>(rng: &mut R, n_taps: usize) -> PumpParams {
    let taps = (0..n_taps).map(|_| Tap { amplitude: rng.random_range(0.1..=1.0), phase: rng.random_range(0.0..TAU) }).collect();
    let log_sigma = rng.random_range((0.5f64).ln()..=(50.0f64).ln());
    PumpParams { sigma_p: AngularFrequency::from_ghz(TAU * log_sigma.exp()), taps }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Best of `restarts` local fits from seeded random starts.
pub fn fit_adp_multistart(
    profile: &AdpProfile,
    model: &AdpModel,
    n_taps: usize,
    restarts: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<AdpFit> {
    let mut rng = rng_for(seed, 0);
    let starts: Vec<PumpParams> = (0..restarts.max(1)).map(|_| random_start(&mut rng, n_taps)).collect();
    let fits = starts.iter().map(|s| fit_adp(profile, model, s, opts)).collect::<Result<Vec<_>>>()?;
    Ok(fits
        .into_iter()
        .fold(None::<AdpFit>, |best, f| match best {
            Some(b) if b.residual <= f.residual => Some(b),
            _ => Some(f),
        })
        .expect("at least one restart"))
}

/// Sampled TDSI factors for one coupling setting.
pub struct SourceSpectra {
    pub pump: Field1D,
    pub signal: Field1D,
    pub idler: Field1D,
}

impl SourceSpectra {
    pub fn compute(
        pump: &ResonanceChain,
        signal: &ResonanceChain,
        idler: &ResonanceChain,
        pump_grid: &SpectralGrid,
        grid_s: &SpectralGrid,
        grid_i: &SpectralGrid,
    ) -> Result<Self> {
        Ok(Self {
            pump: field_enhancement_chain(pump, pump_grid)?,
            signal: field_enhancement_chain(signal, grid_s)?,
            idler: field_enhancement_chain(idler, grid_i)?,
        })
    }
}

/// Target profile after TDSI removal: steps (target) -> decouple -> diagonal cut.
pub fn decoupled_profile(target: &TargetState, spectra: &SourceSpectra, eps: f64) -> Result<AdpProfile> {
    let f = target_jsa(target, &spectra.signal.grid, &spectra.idler.grid)?.as_field();
    let tdsi = compute_tdsi(&spectra.signal, &spectra.idler);
    extract_antidiagonal(&decouple_tdsi(&f, &tdsi, eps)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationScan {
    pub sigma_min: AngularFrequency,
    pub sigma_max: AngularFrequency,
    pub sigma_step: AngularFrequency,
    pub phase_steps: usize,
    pub eps: f64,
}

impl Default for CalibrationScan {
    fn default() -> Self {
        Self {
            sigma_min: AngularFrequency::from_ghz(4.0),
            sigma_max: AngularFrequency::from_ghz(12.0),
            sigma_step: AngularFrequency::from_ghz(0.25),
            phase_steps: 720,
            eps: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub reference_phase: f64,
    pub sigma: AngularFrequency,
    pub residual: f64,
}

/// Recover the delay-line reference phase and the state bandwidth for a known tap set:
/// minimize the magnitude mismatch between its ADP and the TDSI-decoupled ideal state over
/// a (sigma, reference phase) scan, then refine the phase by parabolic interpolation.
pub fn calibrate_reference(
    dimension: usize,
    pump: &PumpParams,
    delay_s: f64,
    spectra: &SourceSpectra,
    scan: &CalibrationScan,
) -> Result<Calibration> {
    if scan.phase_steps < 3 || !(scan.sigma_step.rad_per_s() > 0.0) || scan.sigma_max < scan.sigma_min {
        return Err(TfmError::Config("calibration scan needs >= 3 phase steps and a valid sigma range".into()));
    }
    let models: Vec<AdpModel> = (0..scan.phase_steps)
        .map(|k| AdpModel::new(&spectra.pump, delay_s, TAU * k as f64 / scan.phase_steps as f64))
        .collect::<Result<_>>()?;
    let adps: Vec<Vec<Complex64>> = models.iter().map(|m| m.evaluate(pump)).collect();
    let n_sigma = ((scan.sigma_max.rad_per_s() - scan.sigma_min.rad_per_s()) / scan.sigma_step.rad_per_s() + 1e-9).floor() as usize + 1;
    let mut best: Option<(f64, usize, AngularFrequency, AdpProfile)> = None;
    for s in 0..n_sigma {
        let sigma = scan.sigma_min + scan.sigma_step * s as f64;
        let target = TargetState::maximally_entangled(dimension, sigma, spectra.signal.grid.center(), spectra.idler.grid.center())?;
        let profile = decoupled_profile(&target, spectra, scan.eps)?;
        let norm = profile_norm(&profile, &models[0])?;
        for (k, adp) in adps.iter().enumerate() {
            let (_, r) = projected_residual(adp, &profile.values, norm, FitMode::Magnitude);
            let res: f64 = r.iter().map(|v| v * v).sum();
            if best.as_ref().is_none_or(|b| res < b.0) {
                best = Some((res, k, sigma, profile.clone()));
            }
        }
    }
    let (res, k, sigma, profile) = best.ok_or_else(|| TfmError::Config("empty calibration scan".into()))?;
    let step = TAU / scan.phase_steps as f64;
    let at = |theta: f64| -> Result<f64> {
        Ok(adp_residual(&profile, &AdpModel::new(&spectra.pump, delay_s, theta)?, pump, FitMode::Magnitude)?.1)
    };
    let theta0 = step * k as f64;
    let (lo, hi) = (at(theta0 - step)?, at(theta0 + step)?);
    let curvature = lo - 2.0 * res + hi;
    let mut theta = theta0;
    if curvature > 0.0 {
        theta += 0.5 * step * (lo - hi) / curvature;
    }
    let refined = at(theta)?;
    let (theta, residual) = if refined < res { (theta, refined) } else { (theta0, res) };
    Ok(Calibration { reference_phase: theta.rem_euclid(TAU), sigma, residual })
}

/// Sweep axis for one inter-stage coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuAxis {
    pub min: Rate,
    pub max: Rate,
    pub step: Rate,
}

impl Default for MuAxis {
    fn default() -> Self {
        Self { min: Rate::ZERO, max: Rate::from_ghz(5.0), step: Rate::from_ghz(0.25) }
    }
}

impl MuAxis {
    pub fn values(&self) -> Result<Vec<Rate>> {
        if !(self.step.rad_per_s() > 0.0) {
            return Err(TfmError::Config("mu sweep step must be positive".into()));
        }
        if self.max < self.min || self.min.rad_per_s() < 0.0 {
            return Err(TfmError::Config("mu sweep range is empty".into()));
        }
        let n = ((self.max.rad_per_s() - self.min.rad_per_s()) / self.step.rad_per_s() + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.min + self.step * k as f64).collect())
    }
}

/// Everything held constant during a search.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedParams {
    /// Signal and idler chains; their couplings are overwritten by the sweep.
    pub signal: ResonanceChain,
    pub idler: ResonanceChain,
    /// Pump chain, already positioned on the pump grid centre if energy matched.
    pub pump: ResonanceChain,
    pub n_taps: usize,
    pub delay_s: f64,
    pub grid_points: usize,
    pub half_span: AngularFrequency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    /// One axis per signal/idler coupling (mu_12, mu_23, ...); signal and idler share values.
    pub mu_axes: Vec<MuAxis>,
    pub fit: FitOptions,
    pub seed: u64,
    pub eps: f64,
    pub rule: MinimumRule,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            mu_axes: vec![MuAxis::default()],
            fit: FitOptions::default(),
            seed: 0,
            eps: 1e-3,
            rule: MinimumRule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub mu_index: usize,
    pub mu: Vec<Rate>,
    pub restart: usize,
    pub sigma_p: AngularFrequency,
    pub alpha: Vec<f64>,
    pub phi: Vec<f64>,
    pub fidelity: f64,
    pub k_prime: f64,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimization {
    pub best: TrialRecord,
    pub trace: Vec<TrialRecord>,
}

fn cartesian(axes: &[Vec<Rate>]) -> Vec<Vec<Rate>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

/// Practical JSA from ADP samples and signal/idler enhancements with unity phase matching.
pub fn factorized_jsa(adp: &[Complex64], ls: &Field1D, li: &Field1D) -> Result<Jsa> {
    let n = ls.values.len();
    if adp.len() != 2 * n - 1 || li.values.len() != n {
        return Err(TfmError::Shape("ADP and enhancement lengths disagree".into()));
    }
    let amp = DMatrix::from_fn(n, n, |j, k| adp[j + k] * ls.values[j] * li.values[k]);
    normalize(&Jsa::new(ls.grid, li.grid, amp)?)
}

/// Fidelity of a (phase-imposed) JSA against a target in the Schmidt pair basis.
pub fn pair_basis_fidelity(jsa: &Jsa, target: &TargetState) -> Result<(f64, Vec<f64>)> {
    let w = schmidt_weights(jsa)?;
    let psi = schmidt_pair_state(&w, target, PAIR_BASIS)?;
    let f = fidelity(&density_matrix(&psi), &density_matrix(&target.ideal_vector(PAIR_BASIS)))?;
    Ok((f, w))
}

/// Multi-start search over couplings and pump parameters for a target state.
pub fn optimize_state(target: &TargetState, fixed: &FixedParams, search: &SearchConfig) -> Result<Optimization> {
    target.validate()?;
    if search.restarts == 0 {
        return Err(TfmError::Config("restarts must be at least 1".into()));
    }
    if search.mu_axes.is_empty() {
        return Err(TfmError::Config("mu grid is empty".into()));
    }
    if search.mu_axes.len() + 1 != fixed.signal.stages() {
        return Err(TfmError::Config(format!("{} mu axes given for a {}-stage chain", search.mu_axes.len(), fixed.signal.stages())));
    }
    let axes = search.mu_axes.iter().map(MuAxis::values).collect::<Result<Vec<_>>>()?;
    let points = cartesian(&axes);
    let pump_center = AngularFrequency::from_rad_per_s(0.5 * (fixed.signal.frequency.rad_per_s() + fixed.idler.frequency.rad_per_s()));
    let pump_grid = SpectralGrid::new(pump_center, fixed.half_span, fixed.grid_points)?;
    let grid_s = pump_grid.recentered(fixed.signal.frequency);
    let grid_i = pump_grid.recentered(fixed.idler.frequency);
    let lp = field_enhancement_chain(&fixed.pump, &pump_grid)?;
    let model = AdpModel::new(&lp, fixed.delay_s, 0.0)?;
    let target = TargetState { center_s: grid_s.center(), center_i: grid_i.center(), ..target.clone() };

    let per_point: Vec<Vec<TrialRecord>> = points
        .par_iter()
        .enumerate()
        .map(|(mu_index, mus)| -> Result<Vec<TrialRecord>> {
            let signal = fixed.signal.with_couplings(mus.clone());
            let idler = fixed.idler.with_couplings(mus.clone());
            let spectra = SourceSpectra {
                pump: lp.clone(),
                signal: field_enhancement_chain(&signal, &grid_s)?,
                idler: field_enhancement_chain(&idler, &grid_i)?,
            };
            let profile = decoupled_profile(&target, &spectra, search.eps)?;
            let mut rng = rng_for(search.seed, mu_index as u64);
            (0..search.restarts)
                .map(|restart| {
                    let start = random_start(&mut rng, fixed.n_taps);
                    let fit = fit_adp(&profile, &model, &start, &search.fit)?;
                    let jsa = factorized_jsa(&model.evaluate(&fit.params), &spectra.signal, &spectra.idler)?;
                    let imposed = impose_pi_phase(&jsa, &search.rule, PhaseMode::Magnitude)?;
                    let (fid, w) = pair_basis_fidelity(&imposed.jsa, &target)?;
                    Ok(TrialRecord {
                        mu_index,
                        mu: mus.clone(),
                        restart,
                        sigma_p: fit.params.sigma_p,
                        alpha: fit.params.taps.iter().map(|t| t.amplitude).collect(),
                        phi: fit.params.taps.iter().map(|t| t.wrapped_phase()).collect(),
                        fidelity: fid,
                        k_prime: schmidt_number(&w)?,
                        residual: fit.residual,
                        converged: fit.converged,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let trace: Vec<TrialRecord> = per_point.into_iter().flatten().collect();
    let best = trace
        .iter()
        .fold(None::<&TrialRecord>, |b, t| match b {
            Some(b) if b.fidelity >= t.fidelity => Some(b),
            _ => Some(t),
        })
        .cloned()
        .ok_or_else(|| TfmError::Config("search produced no trials".into()))?;
    Ok(Optimization { best, trace })
}
