//! Command implementations. Each returns structured results and writes its files atomically.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use tfm_core::inversion::{
    calibrate_reference, optimize_state, Calibration, CalibrationScan, Optimization, PumpParams, SourceSpectra, TrialRecord,
};
use tfm_core::pipeline::{estimate_pgr, simulate, AnalysisReport, PgrReport, Simulation};
use tfm_core::pulse_shaper::Tap;
use tfm_core::resonator::{finesse_deg_per_ghz, mzi_max_mu, mzi_phase_for_mu, MziSetting};
use tfm_core::spectral_core::Rate;

use crate::config::{Quantity, SynthConfig};
use crate::output::{fmt9, jsa_csv, json_text, spectrum_csv, write_atomic, write_jsa};
use crate::units::{format_quantity, Kind};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct ComplexMatrix {
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportJson {
    pub name: Option<String>,
    pub lambda: Vec<f64>,
    #[serde(rename = "K_prime")]
    pub k_prime: f64,
    pub purity: f64,
    pub fidelity: Option<f64>,
    pub hg_fidelity: Option<f64>,
    pub subspace_weight: Option<f64>,
    pub higher_order_weight: f64,
    pub c_kl: Option<ComplexMatrix>,
    pub pi_phase_minima_rad_s: Vec<f64>,
    pub pgr_hz: f64,
    pub pairs_per_pulse: f64,
}

impl ReportJson {
    pub fn new(name: Option<String>, r: &AnalysisReport) -> Self {
        let c_kl = r.c_kl.as_ref().map(|m| {
            let rows = |f: fn(&Complex64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
            ComplexMatrix { real: rows(|c| c.re), imag: rows(|c| c.im) }
        });
        Self {
            name,
            lambda: r.lambda.clone(),
            k_prime: r.k_prime,
            purity: r.purity,
            fidelity: r.fidelity,
            hg_fidelity: r.hg_fidelity,
            subspace_weight: r.subspace_weight,
            higher_order_weight: r.higher_order_weight,
            c_kl,
            pi_phase_minima_rad_s: r.pi_phase_minima.clone(),
            pgr_hz: r.pgr.pgr_hz,
            pairs_per_pulse: r.pgr.pairs_per_pulse,
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))
}

fn abs(c: &Complex64) -> f64 {
    c.norm()
}

fn power(c: &Complex64) -> f64 {
    c.norm_sqr()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SimulateOptions {
    pub grid: Option<usize>,
    pub jsa_csv: bool,
}

/// Forward simulation; writes jsa.bin/jsa.json, spectra CSVs and report.json into `out`.
pub fn cmd_simulate(cfg: &SynthConfig, out: &Path, opts: SimulateOptions) -> Result<(Simulation, ReportJson), CliError> {
    let mut device = cfg.device.clone();
    if let Some(n) = opts.grid {
        device.grid.points = n;
    }
    let sim = simulate(&device).map_err(|e| CliError::from(e).context("simulate"))?;
    ensure_dir(out)?;
    write_jsa(out, "jsa", &sim.jsa)?;
    if opts.jsa_csv {
        write_atomic(&out.join("jsa.csv"), jsa_csv(&sim.jsa).as_bytes())?;
    }
    let s = &sim.spectra;
    let pump = spectrum_csv(&[
        ("fir_abs", &s.fir, abs),
        ("shaped_pump_abs", &s.shaped_pump, abs),
        ("enhancement_abs", &s.pump_enhancement, abs),
        ("transmission_power", &s.pump_transmission, power),
    ])?;
    write_atomic(&out.join("spectra_pump.csv"), pump.as_bytes())?;
    for (name, l, t) in [("signal", &s.signal_enhancement, &s.signal_transmission), ("idler", &s.idler_enhancement, &s.idler_transmission)]
    {
        let csv = spectrum_csv(&[("enhancement_abs", l, abs), ("transmission_power", t, power)])?;
        write_atomic(&out.join(format!("spectra_{name}.csv")), csv.as_bytes())?;
    }
    let report = ReportJson::new(cfg.name.clone(), &sim.report);
    write_atomic(&out.join("report.json"), json_text(&report)?.as_bytes())?;
    Ok((sim, report))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OptimizeOptions {
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub grid: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceLine {
    pub mu: serde_json::Map<String, serde_json::Value>,
    pub restart: usize,
    pub sigma_p: f64,
    pub alpha: Vec<f64>,
    pub phi: Vec<f64>,
    pub fidelity: f64,
    pub k_prime: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Coupling names mu_12, mu_23, ... for a list of couplings.
pub fn mu_names(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("mu_{}{}", k + 1, k + 2)).collect()
}

impl TraceLine {
    pub fn new(t: &TrialRecord) -> Self {
        let mu = mu_names(t.mu.len()).into_iter().zip(&t.mu).map(|(k, v)| (k, serde_json::json!(v.rad_per_s()))).collect();
        Self {
            mu,
            restart: t.restart,
            sigma_p: t.sigma_p.rad_per_s(),
            alpha: t.alpha.clone(),
            phi: t.phi.clone(),
            fidelity: t.fidelity,
            k_prime: t.k_prime,
            residual: t.residual,
            converged: t.converged,
        }
    }
}

pub fn trace_jsonl(trace: &[TrialRecord]) -> Result<String, CliError> {
    let mut s = String::new();
    for t in trace {
        let v = crate::output::to_json_value(&TraceLine::new(t))?;
        s.push_str(&v.to_string());
        s.push('\n');
    }
    Ok(s)
}

/// Device config with the best trial's free parameters substituted.
pub fn apply_trial(cfg: &SynthConfig, best: &TrialRecord) -> Result<SynthConfig, CliError> {
    let mut out = cfg.clone();
    let d = &mut out.device;
    d.pump.sigma_p = best.sigma_p;
    d.pump.reference_phase = 0.0;
    d.pump.taps = best.alpha.iter().zip(&best.phi).map(|(&a, &p)| Tap::new(a, p)).collect::<tfm_core::Result<_>>()?;
    d.signal.couplings = best.mu.clone();
    d.idler.couplings = best.mu.clone();
    Ok(out)
}

/// TOML fragment with the free parameters, in the same schema as device configs.
pub fn best_params_toml(best: &TrialRecord) -> Result<String, CliError> {
    #[derive(Serialize)]
    struct Pump {
        sigma_p: Quantity,
        reference_phase: f64,
        amplitudes: Vec<f64>,
        phases: Vec<f64>,
    }
    #[derive(Serialize)]
    struct Couplings {
        couplings: Vec<Quantity>,
    }
    #[derive(Serialize)]
    struct Resonator {
        signal: Couplings,
        idler: Couplings,
    }
    #[derive(Serialize)]
    struct Fragment {
        pump: Pump,
        resonator: Resonator,
    }
    let q = |r: &Rate| Quantity(format_quantity(r.rad_per_s(), Kind::Angular));
    let couplings = || Couplings { couplings: best.mu.iter().map(q).collect() };
    let frag = Fragment {
        pump: Pump { sigma_p: q(&best.sigma_p), reference_phase: 0.0, amplitudes: best.alpha.clone(), phases: best.phi.clone() },
        resonator: Resonator { signal: couplings(), idler: couplings() },
    };
    let body = toml::to_string(&frag).map_err(|e| CliError::Io(format!("encoding best_params: {e}")))?;
    Ok(format!("# Best free parameters from the search (fidelity {}). Merge over a device config.\n{body}", fmt9(best.fidelity)))
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeSummary {
    pub search_fidelity: f64,
    pub trials: usize,
    pub best: TraceLine,
    pub verification: ReportJson,
}

pub struct OptimizeResult {
    pub optimization: Optimization,
    pub verification: Simulation,
    pub summary: OptimizeSummary,
}

/// Multi-start inverse design against the config's target; writes best_params.toml,
/// trace.jsonl, report.json (verification forward run) and summary.json.
pub fn cmd_optimize(cfg: &SynthConfig, out: &Path, opts: OptimizeOptions) -> Result<OptimizeResult, CliError> {
    let target = cfg.device.target.as_ref().ok_or_else(|| CliError::Config("optimize needs a [target] section".into()))?;
    let mut search = cfg.search.search.clone();
    if let Some(s) = opts.seed {
        search.seed = s;
    }
    if let Some(r) = opts.restarts {
        search.restarts = r;
    }
    let mut fixed = cfg.device.fixed_params().map_err(|e| CliError::from(e).context("optimize"))?;
    fixed.grid_points = opts.grid.unwrap_or(cfg.search.grid_points);
    let optimization = optimize_state(target, &fixed, &search).map_err(|e| CliError::from(e).context("optimize"))?;

    let tuned = apply_trial(cfg, &optimization.best)?;
    let verification = simulate(&tuned.device).map_err(|e| CliError::from(e).context("verification run"))?;
    let summary = OptimizeSummary {
        search_fidelity: optimization.best.fidelity,
        trials: optimization.trace.len(),
        best: TraceLine::new(&optimization.best),
        verification: ReportJson::new(cfg.name.clone(), &verification.report),
    };
    ensure_dir(out)?;
    write_atomic(&out.join("trace.jsonl"), trace_jsonl(&optimization.trace)?.as_bytes())?;
    write_atomic(&out.join("best_params.toml"), best_params_toml(&optimization.best)?.as_bytes())?;
    write_atomic(&out.join("report.json"), json_text(&summary.verification)?.as_bytes())?;
    write_atomic(&out.join("summary.json"), json_text(&summary)?.as_bytes())?;
    Ok(OptimizeResult { optimization, verification, summary })
}

pub fn cmd_pgr(cfg: &SynthConfig, average_power_w: Option<f64>, rep_rate_hz: Option<f64>) -> Result<PgrReport, CliError> {
    let p = average_power_w.unwrap_or(cfg.device.optics.average_power_w);
    let r = rep_rate_hz.unwrap_or(cfg.device.optics.rep_rate_hz);
    estimate_pgr(&cfg.device, p, r).map_err(|e| CliError::from(e).context("pgr"))
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationJson {
    pub reference_phase: f64,
    pub bandwidth_ghz: f64,
    pub residual: f64,
}

/// Recover the delay-line reference phase and state bandwidth for the configured taps.
pub fn cmd_calibrate(cfg: &SynthConfig, scan: &CalibrationScan) -> Result<Calibration, CliError> {
    let d = &cfg.device;
    let target = d.target.as_ref().ok_or_else(|| CliError::Config("calibrate needs a [target] section".into()))?;
    let grids = d.grids().map_err(|e| CliError::from(e).context("calibrate"))?;
    let spectra = SourceSpectra::compute(&d.effective_pump_resonance(), &d.signal, &d.idler, &grids.pump, &grids.signal, &grids.idler)?;
    let pump = PumpParams { sigma_p: d.pump.sigma_p, taps: d.pump.taps.clone() };
    calibrate_reference(target.dimension(), &pump, d.pump.delay_s, &spectra, scan).map_err(|e| CliError::from(e).context("calibrate"))
}

#[derive(Clone, Copy, Debug)]
pub struct MuRange {
    pub min: Rate,
    pub max: Rate,
    pub step: Rate,
}

pub struct MziSweep {
    pub csv: String,
    pub rows: Vec<(Rate, MziSetting)>,
    pub warnings: Vec<String>,
}

/// MZI phase settings across a coupling range; rows past the reachable maximum are dropped.
pub fn cmd_sweep_mzi(cfg: &SynthConfig, splitter: Option<f64>, range: MuRange) -> Result<MziSweep, CliError> {
    let mzi = cfg.mzi.ok_or_else(|| CliError::Config("sweep-mzi needs an [mzi] section".into()))?;
    let k = splitter.unwrap_or(mzi.splitter);
    let axis = tfm_core::inversion::MuAxis { min: range.min, max: range.max, step: range.step };
    let values = axis.values().map_err(|e| CliError::from(e).context("sweep-mzi"))?;
    let max = mzi_max_mu(k, &mzi.geometry).map_err(|e| CliError::from(e).context("mzi.splitter"))?;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    let mut csv = String::from("mu_12_ghz,phi_h1_rad,phi_h2_rad,phi_h3_rad,finesse_deg_per_ghz\n");
    for mu in values {
        if mu.rad_per_s() > max.rad_per_s() {
            warnings.push(format!("sweep truncated at {} GHz: splitter {k} reaches at most {} GHz", fmt9(mu.ghz()), fmt9(max.ghz())));
            break;
        }
        let s = mzi_phase_for_mu(k, &mzi.geometry, mu)?;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt9(mu.ghz()),
            fmt9(s.phases.upper_arm),
            fmt9(s.phases.lower_arm),
            fmt9(s.phases.output),
            fmt9(finesse_deg_per_ghz(&s))
        ));
        rows.push((mu, s));
    }
    Ok(MziSweep { csv, rows, warnings })
}

pub fn default_mu_range() -> MuRange {
    MuRange { min: Rate::ZERO, max: Rate::from_ghz(10.0), step: Rate::from_ghz(0.25) }
}

pub fn calibration_json(c: &Calibration) -> CalibrationJson {
    CalibrationJson { reference_phase: c.reference_phase, bandwidth_ghz: c.sigma.ghz(), residual: c.residual }
}

pub fn out_path(out: &Option<PathBuf>, default: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(default))
}
