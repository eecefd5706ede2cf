//! Schmidt decomposition, TFM-basis states, Uhlmann fidelity and pair generation rate.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TfmError};
use crate::jsa_engine::Jsa;
use crate::spectral_core::{hg_value, AngularFrequency, Field1D, Rate, SpectralGrid, SqrtRate};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Number of mode pairs spanning the TFM subspace used for density matrices.
pub const PAIR_BASIS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtResult {
    /// Descending, summing to one.
    pub weights: Vec<f64>,
    pub signal_modes: Vec<Field1D>,
    pub idler_modes: Vec<Field1D>,
}

fn check_normalized(jsa: &Jsa) -> Result<()> {
    let n = jsa.norm_sqr();
    if (n - 1.0).abs() > 1e-6 {
        return Err(TfmError::Precondition(format!("Schmidt decomposition needs a normalized JSA (norm {n})")));
    }
    Ok(())
}

/// Indices of `values` sorted descending, ties kept in input order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx
}

fn weights_from(singular: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = singular.iter().map(|s| s * s).sum();
    if !(total > 0.0) {
        return Err(TfmError::Degenerate("JSA has no Schmidt weight".into()));
    }
    Ok(singular.iter().map(|s| s * s / total).collect())
}

fn scaled_real(jsa: &Jsa) -> DMatrix<f64> {
    let w = jsa.cell_area().sqrt();
    jsa.amplitude.map(|v| v.re * w)
}

fn scaled_complex(jsa: &Jsa) -> DMatrix<Complex64> {
    let w = jsa.cell_area().sqrt();
    jsa.amplitude.map(|v| v * w)
}

/// Schmidt weights only. Real amplitudes take the cheaper real SVD.
pub fn schmidt_weights(jsa: &Jsa) -> Result<Vec<f64>> {
    check_normalized(jsa)?;
    let sv: Vec<f64> = if jsa.is_real() {
        scaled_real(jsa).svd(false, false).singular_values.iter().cloned().collect()
    } else {
        scaled_complex(jsa).svd(false, false).singular_values.iter().cloned().collect()
    };
    let order = descending_order(&sv);
    weights_from(&order.iter().map(|&k| sv[k]).collect::<Vec<_>>())
}

/// F(ws, wi) = sum_k sqrt(lambda_k) u_k(ws) v_k(wi), keeping at most `max_modes` pairs.
pub fn schmidt_decompose(jsa: &Jsa, max_modes: usize) -> Result<SchmidtResult> {
    check_normalized(jsa)?;
    let (u, sv, vt): (DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>) = if jsa.is_real() {
        let svd = scaled_real(jsa).svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        (u.map(|x| Complex64::new(x, 0.0)), svd.singular_values.iter().cloned().collect(), vt.map(|x| Complex64::new(x, 0.0)))
    } else {
        let svd = scaled_complex(jsa).svd(true, true);
        (svd.u.expect("u requested"), svd.singular_values.iter().cloned().collect(), svd.v_t.expect("v_t requested"))
    };
    let order = descending_order(&sv);
    let all = weights_from(&order.iter().map(|&k| sv[k]).collect::<Vec<_>>())?;
    let keep = max_modes.max(1).min(order.len());
    let (ws, wi) = (jsa.grid_s.spacing().sqrt(), jsa.grid_i.spacing().sqrt());
    let mut signal_modes = Vec::with_capacity(keep);
    let mut idler_modes = Vec::with_capacity(keep);
    for &k in &order[..keep] {
        signal_modes.push(Field1D::new(jsa.grid_s, u.column(k).iter().map(|v| v / ws).collect())?);
        idler_modes.push(Field1D::new(jsa.grid_i, vt.row(k).iter().map(|v| v / wi).collect())?);
    }
    Ok(SchmidtResult { weights: all[..keep].to_vec(), signal_modes, idler_modes })
}

impl SchmidtResult {
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let ns = self.signal_modes[0].values.len();
        let ni = self.idler_modes[0].values.len();
        let mut out = DMatrix::from_element(ns, ni, Complex64::new(0.0, 0.0));
        for ((w, u), v) in self.weights.iter().zip(&self.signal_modes).zip(&self.idler_modes) {
            let s = w.sqrt();
            for k in 0..ni {
                for j in 0..ns {
                    out[(j, k)] += u.values[j] * v.values[k] * s;
                }
            }
        }
        out
    }
}

pub fn schmidt_number(weights: &[f64]) -> Result<f64> {
    Ok(1.0 / purity(weights)?)
}

pub fn purity(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(TfmError::Degenerate("empty Schmidt spectrum".into()));
    }
    Ok(weights.iter().map(|w| w * w).sum())
}

/// Weight outside the leading `pairs` Schmidt pairs.
pub fn higher_order_weight(weights: &[f64], pairs: usize) -> f64 {
    1.0 - weights.iter().take(pairs).sum::<f64>()
}

/// sum_k c_k |k>_s |k>_i over Hermite-Gaussian modes of width `sigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub coefficients: Vec<f64>,
    pub sigma: AngularFrequency,
    pub center_s: AngularFrequency,
    pub center_i: AngularFrequency,
}

impl TargetState {
    /// (|00> - |11> + |22> - ...)/sqrt(D).
    pub fn maximally_entangled(
        dimension: usize,
        sigma: AngularFrequency,
        center_s: AngularFrequency,
        center_i: AngularFrequency,
    ) -> Result<Self> {
        if dimension == 0 || dimension > PAIR_BASIS {
            return Err(TfmError::Domain(format!("target dimension {dimension} outside 1..={PAIR_BASIS}")));
        }
        let c = 1.0 / (dimension as f64).sqrt();
        let coefficients = (0..dimension).map(|k| if k % 2 == 0 { c } else { -c }).collect();
        let t = Self { coefficients, sigma, center_s, center_i };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let norm: f64 = self.coefficients.iter().map(|c| c * c).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(TfmError::Domain(format!("target coefficients must have unit norm, got {norm}")));
        }
        if self.coefficients.len() > PAIR_BASIS {
            return Err(TfmError::Domain("target uses more modes than the pair basis".into()));
        }
        if !(self.sigma.rad_per_s() > 0.0) {
            return Err(TfmError::Domain("target bandwidth sigma must be positive".into()));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.coefficients.len()
    }

    /// Ideal state in the d x d pair basis, index k*d + l.
    pub fn ideal_vector(&self, d: usize) -> DVector<Complex64> {
        let mut v = DVector::from_element(d * d, Complex64::new(0.0, 0.0));
        for (k, c) in self.coefficients.iter().enumerate().take(d) {
            v[k * d + k] = Complex64::new(*c, 0.0);
        }
        v
    }
}

fn hg_table(grid: &SpectralGrid, center: AngularFrequency, sigma: AngularFrequency, d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|k| (0..grid.len()).map(|j| hg_value(k, grid.point(j) - center.rad_per_s(), sigma.rad_per_s())).collect()).collect()
}

pub fn target_jsa(target: &TargetState, grid_s: &SpectralGrid, grid_i: &SpectralGrid) -> Result<Jsa> {
    target.validate()?;
    let d = target.dimension();
    let fs = hg_table(grid_s, target.center_s, target.sigma, d);
    let fi = hg_table(grid_i, target.center_i, target.sigma, d);
    let amp = DMatrix::from_fn(grid_s.len(), grid_i.len(), |j, k| {
        Complex64::new((0..d).map(|m| target.coefficients[m] * fs[m][j] * fi[m][k]).sum(), 0.0)
    });
    crate::jsa_engine::normalize(&Jsa::new(*grid_s, *grid_i, amp)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TfmProjection {
    /// c_kl = <f_k (x) f_l, F>.
    pub amplitudes: DMatrix<Complex64>,
    pub subspace_weight: f64,
    /// Renormalized vectorized state, index k*d + l.
    pub state: DVector<Complex64>,
    /// Less than half the JSA weight lies in the subspace.
    pub suspicious: bool,
}

pub fn project_to_tfm(jsa: &Jsa, sigma: AngularFrequency, d: usize) -> Result<TfmProjection> {
    check_normalized(jsa)?;
    if d == 0 {
        return Err(TfmError::Domain("projection dimension must be positive".into()));
    }
    let centre = |g: &SpectralGrid| g.center();
    let fs = hg_table(&jsa.grid_s, centre(&jsa.grid_s), sigma, d);
    let fi = hg_table(&jsa.grid_i, centre(&jsa.grid_i), sigma, d);
    let area = jsa.cell_area();
    let amplitudes = DMatrix::from_fn(d, d, |k, l| {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..jsa.grid_i.len() {
            let mut col = Complex64::new(0.0, 0.0);
            for r in 0..jsa.grid_s.len() {
                col += jsa.amplitude[(r, c)] * fs[k][r];
            }
            acc += col * fi[l][c];
        }
        acc * area
    });
    let subspace_weight: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
    if !(subspace_weight > 0.0) {
        return Err(TfmError::Degenerate("JSA has no weight in the TFM subspace".into()));
    }
    let norm = subspace_weight.sqrt();
    let state = DVector::from_fn(d * d, |idx, _| amplitudes[(idx / d, idx % d)] / norm);
    Ok(TfmProjection { amplitudes, subspace_weight, state, suspicious: subspace_weight < 0.5 })
}

/// Pure state built from the leading `d` Schmidt pairs mapped to |kk>, renormalized within the
/// subspace. The free phase of each Schmidt pair is fixed to match the target's coefficient.
pub fn schmidt_pair_state(weights: &[f64], target: &TargetState, d: usize) -> Result<DVector<Complex64>> {
    let kept: f64 = weights.iter().take(d).sum();
    if !(kept > 0.0) {
        return Err(TfmError::Degenerate("no Schmidt weight in the pair subspace".into()));
    }
    let mut v = DVector::from_element(d * d, Complex64::new(0.0, 0.0));
    for (k, w) in weights.iter().enumerate().take(d) {
        let sign = match target.coefficients.get(k) {
            Some(c) if *c < 0.0 => -1.0,
            _ => 1.0,
        };
        v[k * d + k] = Complex64::new(sign * (w / kept).sqrt(), 0.0);
    }
    Ok(v)
}

pub fn density_matrix(state: &DVector<Complex64>) -> DMatrix<Complex64> {
    state * state.adjoint()
}

fn check_density(rho: &DMatrix<Complex64>) -> Result<()> {
    if !rho.is_square() {
        return Err(TfmError::Shape("density matrix must be square".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-6 {
        return Err(TfmError::Precondition(format!("density matrix trace {tr} is not 1")));
    }
    Ok(())
}

fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let cut = rounding_floor(eig.eigenvalues.as_slice());
    let roots = eig.eigenvalues.map(|l| Complex64::new(if l > cut { l.sqrt() } else { 0.0 }, 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Eigenvalues below this are rounding noise; their square roots would otherwise
/// contribute at the 1e-8 level for pure states.
fn rounding_floor(eigenvalues: &[f64]) -> f64 {
    let top = eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    64.0 * f64::EPSILON * top * eigenvalues.len() as f64
}

/// Uhlmann fidelity [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2.
pub fn fidelity(rho: &DMatrix<Complex64>, sigma: &DMatrix<Complex64>) -> Result<f64> {
    check_density(rho)?;
    check_density(sigma)?;
    if rho.shape() != sigma.shape() {
        return Err(TfmError::Shape("density matrices of different size".into()));
    }
    let r = psd_sqrt(rho);
    let inner = &r * sigma * &r;
    let herm = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen().eigenvalues;
    let cut = rounding_floor(eig.as_slice());
    let trace: f64 = eig.iter().filter(|&&l| l > cut).map(|l| l.sqrt()).sum();
    Ok((trace * trace).clamp(0.0, 1.0))
}

pub fn pure_state_fidelity(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.dotc(b).norm_sqr()
}

/// gamma = n2 w / (c A_eff), in 1/(W m).
pub fn nonlinear_parameter(n2: f64, omega: AngularFrequency, effective_area: f64) -> f64 {
    n2 * omega.rad_per_s() / (SPEED_OF_LIGHT * effective_area)
}

pub fn pulse_energy(average_power_w: f64, rep_rate_hz: f64) -> f64 {
    average_power_w / rep_rate_hz
}

/// Q_tot = w / (2 sum_m 1/tau_m).
pub fn total_quality_factor(omega: AngularFrequency, decay_rates: &[Rate]) -> f64 {
    omega.rad_per_s() / (2.0 * decay_rates.iter().map(|r| r.rad_per_s()).sum::<f64>())
}

/// Q_ext = w / kappa^2.
pub fn external_quality_factor(omega: AngularFrequency, kappa: SqrtRate) -> f64 {
    omega.rad_per_s() / kappa.squared().rad_per_s()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgrInput {
    pub gamma: f64,
    pub pulse_energy_j: f64,
    pub group_velocity: f64,
    pub radius_m: f64,
    pub pump_frequency: AngularFrequency,
    pub q_total: f64,
    pub q_external: f64,
    pub rep_rate_hz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgrEstimate {
    pub pairs_per_pulse: f64,
    pub pgr_hz: f64,
}

/// N = 3 gamma^2 W^2 V_g^4 / (8 pi^2 R^2 w^2) * Q_tot^6 / Q_ext^4 pairs per pulse.
pub fn pair_generation_rate(inp: &PgrInput) -> Result<PgrEstimate> {
    let fields = [
        ("gamma", inp.gamma),
        ("pulse energy", inp.pulse_energy_j),
        ("group velocity", inp.group_velocity),
        ("radius", inp.radius_m),
        ("pump frequency", inp.pump_frequency.rad_per_s()),
        ("Q_tot", inp.q_total),
        ("Q_ext", inp.q_external),
        ("repetition rate", inp.rep_rate_hz),
    ];
    if let Some((name, _)) = fields.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(TfmError::Domain(format!("pair generation rate input {name} must be positive")));
    }
    let w = inp.pump_frequency.rad_per_s();
    let pairs_per_pulse = 3.0 * inp.gamma.powi(2) * inp.pulse_energy_j.powi(2) * inp.group_velocity.powi(4)
        / (8.0 * PI * PI * inp.radius_m.powi(2) * w * w)
        * inp.q_total.powi(6)
        / inp.q_external.powi(4);
    Ok(PgrEstimate { pairs_per_pulse, pgr_hz: pairs_per_pulse * inp.rep_rate_hz })
}
