//! Device configuration files: TOML with explicit unit suffixes on every dimensioned value.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use tfm_core::analysis::TargetState;
use tfm_core::inversion::{FitMode, FitOptions, MuAxis, SearchConfig};
use tfm_core::jsa_engine::{JsaPath, MinimumRule, PhaseMode};
use tfm_core::phase_matching::{DispersionModel, LinearDispersion, TaylorDispersion};
use tfm_core::pipeline::{AnalysisOptions, Device, GridSpec, PumpResonance, SourceOptics};
use tfm_core::pulse_shaper::{PumpSpec, Tap};
use tfm_core::resonator::{perimeter_from_spacing, MziGeometry, ResonanceChain, ResonanceLabel};
use tfm_core::spectral_core::{AngularFrequency, Rate, SqrtRate};

use crate::units::{format_quantity, parse_quantity, Kind};
use crate::CliError;

/// A dimensioned value as written in the file, e.g. "7.26 GHz". Bare numbers are rejected.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Quantity(pub String);

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Quantity;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a string with a unit suffix, such as \"7.26 GHz\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Quantity, E> {
                Ok(Quantity(v.to_owned()))
            }
        }
        d.deserialize_str(V)
    }
}

impl Quantity {
    fn si(&self, kind: Kind, key: &str) -> Result<f64, CliError> {
        parse_quantity(&self.0, kind).map_err(|e| CliError::Config(format!("{key}: {e}")))
    }

    fn of(value: f64, kind: Kind) -> Self {
        Quantity(format_quantity(value, kind))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<RawTarget>,
    #[serde(default)]
    pub grid: RawGrid,
    pub pump: RawPump,
    pub resonator: RawResonator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<RawDispersion>,
    #[serde(default)]
    pub analysis: RawAnalysis,
    #[serde(default)]
    pub optics: RawOptics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mzi: Option<RawMzi>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<RawSearch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTarget {
    pub dimension: usize,
    pub bandwidth: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_span: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_sigmas: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPump {
    pub sigma_p: Quantity,
    pub delay: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<Quantity>,
    /// Radians.
    #[serde(default)]
    pub reference_phase: f64,
    pub amplitudes: Vec<f64>,
    /// Radians.
    pub phases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawResonator {
    pub group_velocity: Quantity,
    /// Main-ring perimeter; derived from the signal/idler spacing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perimeter: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_resonance: Option<PumpResonance>,
    pub signal: RawChain,
    pub idler: RawChain,
    pub pump: RawChain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChain {
    pub frequency: Quantity,
    pub kappa: Quantity,
    pub decay_rates: Vec<Quantity>,
    #[serde(default)]
    pub couplings: Vec<Quantity>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum RawDispersion {
    Linear {
        c1: f64,
        c2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<Quantity>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<Quantity>,
    },
    Taylor {
        k1: Quantity,
        k2: Quantity,
        nonlinear_shift: Quantity,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<Quantity>,
    },
    Unity,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAnalysis {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_mode: Option<PhaseMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<JsaPath>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOptics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_area: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average_power: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep_rate: Option<Quantity>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMzi {
    /// Power splitting ratio k' of each directional coupler.
    pub splitter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_perimeter: Option<Quantity>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSearch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_mode: Option<FitMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<RawMuAxis>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMuAxis {
    pub min: Quantity,
    pub max: Quantity,
    pub step: Quantity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MziConfig {
    pub splitter: f64,
    pub geometry: MziGeometry,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSettings {
    pub search: SearchConfig,
    /// Grid used inside the search loop; the verification run uses the device grid.
    pub grid_points: usize,
}

pub const SEARCH_GRID_POINTS: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub name: Option<String>,
    pub device: Device,
    pub mzi: Option<MziConfig>,
    pub search: SearchSettings,
}

fn chain(raw: &RawChain, label: ResonanceLabel, key: &str, perimeter_m: f64, group_velocity: f64) -> Result<ResonanceChain, CliError> {
    let rates = |list: &[Quantity], name: &str| -> Result<Vec<Rate>, CliError> {
        list.iter().enumerate().map(|(n, q)| Ok(Rate::from_rad_per_s(q.si(Kind::Angular, &format!("{key}.{name}[{n}]"))?))).collect()
    };
    Ok(ResonanceChain {
        label,
        frequency: AngularFrequency::from_rad_per_s(raw.frequency.si(Kind::Angular, &format!("{key}.frequency"))?),
        decay_rates: rates(&raw.decay_rates, "decay_rates")?,
        kappa: SqrtRate::from_sqrt_per_s(raw.kappa.si(Kind::SqrtRate, &format!("{key}.kappa"))?),
        couplings: rates(&raw.couplings, "couplings")?,
        perimeter_m,
        group_velocity,
    })
}

fn component(e: tfm_core::TfmError, key: &str) -> CliError {
    CliError::from(e).context(key)
}

impl RawConfig {
    pub fn resolve(&self) -> Result<SynthConfig, CliError> {
        let r = &self.resonator;
        let group_velocity = r.group_velocity.si(Kind::Speed, "resonator.group_velocity")?;
        let signal_w = r.signal.frequency.si(Kind::Angular, "resonator.signal.frequency")?;
        let idler_w = r.idler.frequency.si(Kind::Angular, "resonator.idler.frequency")?;
        let perimeter_m = match &r.perimeter {
            Some(p) => p.si(Kind::Length, "resonator.perimeter")?,
            None => perimeter_from_spacing(group_velocity, AngularFrequency::from_rad_per_s(0.5 * (signal_w - idler_w).abs()))
                .map_err(|e| component(e, "resonator.perimeter"))?,
        };
        let signal = chain(&r.signal, ResonanceLabel::Signal, "resonator.signal", perimeter_m, group_velocity)?;
        let idler = chain(&r.idler, ResonanceLabel::Idler, "resonator.idler", perimeter_m, group_velocity)?;
        let pump_resonance = chain(&r.pump, ResonanceLabel::Pump, "resonator.pump", perimeter_m, group_velocity)?;

        let p = &self.pump;
        if p.amplitudes.len() != p.phases.len() {
            return Err(CliError::Config(format!(
                "pump.amplitudes has {} entries but pump.phases has {}",
                p.amplitudes.len(),
                p.phases.len()
            )));
        }
        let taps = p
            .amplitudes
            .iter()
            .zip(&p.phases)
            .map(|(&a, &ph)| Tap::new(a, ph))
            .collect::<tfm_core::Result<Vec<_>>>()
            .map_err(|e| component(e, "pump.amplitudes"))?;
        let carrier = match &p.carrier {
            Some(c) => AngularFrequency::from_rad_per_s(c.si(Kind::Angular, "pump.carrier")?),
            None => AngularFrequency::from_rad_per_s(0.5 * (signal_w + idler_w)),
        };
        let pump = PumpSpec {
            sigma_p: AngularFrequency::from_rad_per_s(p.sigma_p.si(Kind::Angular, "pump.sigma_p")?),
            carrier,
            taps,
            delay_s: p.delay.si(Kind::Time, "pump.delay")?,
            reference_phase: p.reference_phase,
        };

        let target = match &self.target {
            Some(t) => {
                let sigma = AngularFrequency::from_rad_per_s(t.bandwidth.si(Kind::Angular, "target.bandwidth")?);
                let mut state = TargetState::maximally_entangled(t.dimension, sigma, signal.frequency, idler.frequency)
                    .map_err(|e| component(e, "target.dimension"))?;
                if let Some(c) = &t.coefficients {
                    state.coefficients = c.clone();
                }
                state.validate().map_err(|e| component(e, "target.coefficients"))?;
                Some(state)
            }
            None => None,
        };

        let defaults = GridSpec::default();
        let grid = GridSpec {
            points: self.grid.points.unwrap_or(defaults.points),
            half_span: match &self.grid.half_span {
                Some(h) => Some(AngularFrequency::from_rad_per_s(h.si(Kind::Angular, "grid.half_span")?)),
                None => None,
            },
            span_sigmas: self.grid.span_sigmas.unwrap_or(defaults.span_sigmas),
        };

        let rule_default = MinimumRule::default();
        let analysis = AnalysisOptions {
            rule: MinimumRule {
                threshold: self.analysis.threshold.unwrap_or(rule_default.threshold),
                floor: self.analysis.floor.unwrap_or(rule_default.floor),
            },
            phase_mode: self.analysis.phase_mode.unwrap_or_default(),
            path: self.analysis.path.unwrap_or_default(),
        };

        let od = SourceOptics::default();
        let o = &self.optics;
        let opt = |q: &Option<Quantity>, kind, key: &str, default: f64| -> Result<f64, CliError> {
            q.as_ref().map_or(Ok(default), |q| q.si(kind, key))
        };
        let optics = SourceOptics {
            n2: opt(&o.n2, Kind::KerrIndex, "optics.n2", od.n2)?,
            effective_area_m2: opt(&o.effective_area, Kind::Area, "optics.effective_area", od.effective_area_m2)?,
            average_power_w: opt(&o.average_power, Kind::Power, "optics.average_power", od.average_power_w)?,
            rep_rate_hz: opt(&o.rep_rate, Kind::Cyclic, "optics.rep_rate", od.rep_rate_hz)?,
        };

        let mut device = Device {
            pump,
            signal,
            idler,
            pump_resonance,
            pump_alignment: r.pump_resonance.unwrap_or_default(),
            dispersion: DispersionModel::Unity,
            target,
            grid,
            analysis,
            optics,
        };
        device.dispersion = self.dispersion_model(&device, perimeter_m)?;
        device.validate().map_err(|e| component(e, "device"))?;

        let mzi = match &self.mzi {
            Some(m) => Some(MziConfig {
                splitter: m.splitter,
                geometry: MziGeometry {
                    main_perimeter_m: perimeter_m,
                    aux_perimeter_m: match &m.aux_perimeter {
                        Some(q) => q.si(Kind::Length, "mzi.aux_perimeter")?,
                        None => 0.5 * perimeter_m,
                    },
                    group_velocity,
                },
            }),
            None => None,
        };

        Ok(SynthConfig { name: self.name.clone(), search: self.search_settings(&device)?, device, mzi })
    }

    fn dispersion_model(&self, device: &Device, perimeter_m: f64) -> Result<DispersionModel, CliError> {
        let length =
            |q: &Option<Quantity>, key: &str| -> Result<f64, CliError> { q.as_ref().map_or(Ok(perimeter_m), |q| q.si(Kind::Length, key)) };
        let default_linear = RawDispersion::Linear { c1: 1.0, c2: -1.0, slope: None, length: None };
        Ok(match self.dispersion.as_ref().unwrap_or(&default_linear) {
            RawDispersion::Linear { c1, c2, slope, length: l } => {
                let length_m = length(l, "dispersion.length")?;
                match slope {
                    Some(s) => DispersionModel::Linear(LinearDispersion {
                        c1: *c1,
                        c2: *c2,
                        slope: s.si(Kind::InverseSpeed, "dispersion.slope")?,
                        length_m,
                    }),
                    None => {
                        let half = device.half_span().map_err(|e| component(e, "grid.half_span"))?;
                        DispersionModel::Linear(
                            LinearDispersion::near_transparent(*c1, *c2, length_m, half.rad_per_s())
                                .map_err(|e| component(e, "dispersion"))?,
                        )
                    }
                }
            }
            RawDispersion::Taylor { k1, k2, nonlinear_shift, length: l } => DispersionModel::Taylor(TaylorDispersion {
                k1: k1.si(Kind::InverseSpeed, "dispersion.k1")?,
                k2: k2.si(Kind::Dispersion, "dispersion.k2")?,
                nonlinear_shift: nonlinear_shift.si(Kind::Wavenumber, "dispersion.nonlinear_shift")?,
                length_m: length(l, "dispersion.length")?,
            }),
            RawDispersion::Unity => DispersionModel::Unity,
        })
    }

    fn search_settings(&self, device: &Device) -> Result<SearchSettings, CliError> {
        let raw = self.search.clone().unwrap_or_default();
        let defaults = SearchConfig::default();
        let fit_defaults = FitOptions::default();
        let mu_axes = match &raw.mu {
            Some(axes) => axes
                .iter()
                .enumerate()
                .map(|(n, a)| {
                    let get = |q: &Quantity, f: &str| -> Result<Rate, CliError> {
                        Ok(Rate::from_rad_per_s(q.si(Kind::Angular, &format!("search.mu[{n}].{f}"))?))
                    };
                    Ok(MuAxis { min: get(&a.min, "min")?, max: get(&a.max, "max")?, step: get(&a.step, "step")? })
                })
                .collect::<Result<Vec<_>, CliError>>()?,
            None => vec![MuAxis::default(); device.signal.stages().saturating_sub(1).max(1)],
        };
        Ok(SearchSettings {
            search: SearchConfig {
                restarts: raw.restarts.unwrap_or(defaults.restarts),
                mu_axes,
                fit: FitOptions {
                    mode: raw.fit_mode.unwrap_or(fit_defaults.mode),
                    max_iterations: raw.max_iterations.unwrap_or(fit_defaults.max_iterations),
                    ..fit_defaults
                },
                seed: raw.seed.unwrap_or(defaults.seed),
                eps: raw.eps.unwrap_or(defaults.eps),
                rule: device.analysis.rule,
            },
            grid_points: raw.grid_points.unwrap_or(SEARCH_GRID_POINTS),
        })
    }
}

fn raw_chain(c: &ResonanceChain) -> RawChain {
    RawChain {
        frequency: Quantity::of(c.frequency.rad_per_s(), Kind::Angular),
        kappa: Quantity::of(c.kappa.sqrt_per_s(), Kind::SqrtRate),
        decay_rates: c.decay_rates.iter().map(|r| Quantity::of(r.rad_per_s(), Kind::Angular)).collect(),
        couplings: c.couplings.iter().map(|r| Quantity::of(r.rad_per_s(), Kind::Angular)).collect(),
    }
}

impl SynthConfig {
    /// Fully explicit raw form in canonical units; resolving it gives back `self`.
    pub fn to_raw(&self) -> RawConfig {
        let d = &self.device;
        let a = |v: f64| Quantity::of(v, Kind::Angular);
        let perimeter_m = d.signal.perimeter_m;
        let dispersion = match &d.dispersion {
            DispersionModel::Linear(m) => RawDispersion::Linear {
                c1: m.c1,
                c2: m.c2,
                slope: Some(Quantity::of(m.slope, Kind::InverseSpeed)),
                length: Some(Quantity::of(m.length_m, Kind::Length)),
            },
            DispersionModel::Taylor(m) => RawDispersion::Taylor {
                k1: Quantity::of(m.k1, Kind::InverseSpeed),
                k2: Quantity::of(m.k2, Kind::Dispersion),
                nonlinear_shift: Quantity::of(m.nonlinear_shift, Kind::Wavenumber),
                length: Some(Quantity::of(m.length_m, Kind::Length)),
            },
            DispersionModel::Unity => RawDispersion::Unity,
        };
        let s = &self.search.search;
        RawConfig {
            name: self.name.clone(),
            target: d.target.as_ref().map(|t| RawTarget {
                dimension: t.dimension(),
                bandwidth: a(t.sigma.rad_per_s()),
                coefficients: Some(t.coefficients.clone()),
            }),
            grid: RawGrid {
                points: Some(d.grid.points),
                half_span: d.grid.half_span.map(|h| a(h.rad_per_s())),
                span_sigmas: Some(d.grid.span_sigmas),
            },
            pump: RawPump {
                sigma_p: a(d.pump.sigma_p.rad_per_s()),
                delay: Quantity::of(d.pump.delay_s, Kind::Time),
                carrier: Some(a(d.pump.carrier.rad_per_s())),
                reference_phase: d.pump.reference_phase,
                amplitudes: d.pump.taps.iter().map(|t| t.amplitude).collect(),
                phases: d.pump.taps.iter().map(|t| t.phase).collect(),
            },
            resonator: RawResonator {
                group_velocity: Quantity::of(d.signal.group_velocity, Kind::Speed),
                perimeter: Some(Quantity::of(perimeter_m, Kind::Length)),
                pump_resonance: Some(d.pump_alignment),
                signal: raw_chain(&d.signal),
                idler: raw_chain(&d.idler),
                pump: raw_chain(&d.pump_resonance),
            },
            dispersion: Some(dispersion),
            analysis: RawAnalysis {
                threshold: Some(d.analysis.rule.threshold),
                floor: Some(d.analysis.rule.floor),
                phase_mode: Some(d.analysis.phase_mode),
                path: Some(d.analysis.path),
            },
            optics: RawOptics {
                n2: Some(Quantity::of(d.optics.n2, Kind::KerrIndex)),
                effective_area: Some(Quantity::of(d.optics.effective_area_m2, Kind::Area)),
                average_power: Some(Quantity::of(d.optics.average_power_w, Kind::Power)),
                rep_rate: Some(Quantity::of(d.optics.rep_rate_hz, Kind::Cyclic)),
            },
            mzi: self
                .mzi
                .map(|m| RawMzi { splitter: m.splitter, aux_perimeter: Some(Quantity::of(m.geometry.aux_perimeter_m, Kind::Length)) }),
            search: Some(RawSearch {
                restarts: Some(s.restarts),
                seed: Some(s.seed),
                eps: Some(s.eps),
                grid_points: Some(self.search.grid_points),
                fit_mode: Some(s.fit.mode),
                max_iterations: Some(s.fit.max_iterations),
                mu: Some(
                    s.mu_axes
                        .iter()
                        .map(|m| RawMuAxis { min: a(m.min.rad_per_s()), max: a(m.max.rad_per_s()), step: a(m.step.rad_per_s()) })
                        .collect(),
                ),
            }),
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(&self.to_raw()).map_err(|e| CliError::Config(format!("serializing config: {e}")))
    }
}

pub fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn parse(text: &str) -> Result<SynthConfig, CliError> {
    parse_raw(text)?.resolve()
}

pub fn load(path: &Path) -> Result<SynthConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| e.context(&path.display().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [target]
        dimension = 2
        bandwidth = "6.75 GHz"

        [pump]
        sigma_p = "4.02 2piGHz"
        delay = "75 ps"
        amplitudes = [1.0, 0.5]
        phases = [0.0, 1.0]

        [resonator]
        group_velocity = "7.14e7 m/s"

        [resonator.signal]
        frequency = "1215.70 THz"
        kappa = "0.0985 sqrtTHz"
        decay_rates = ["7.26 GHz", "2.44 GHz"]
        couplings = ["1.45 GHz"]

        [resonator.idler]
        frequency = "1214.45 THz"
        kappa = "0.0985 sqrtTHz"
        decay_rates = ["7.26 GHz", "2.44 GHz"]
        couplings = ["1.45 GHz"]

        [resonator.pump]
        frequency = "1215.07 THz"
        kappa = "0.0985 sqrtTHz"
        decay_rates = ["7.26 GHz", "2.44 GHz"]
        couplings = ["0 GHz"]
    "#;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        let d = &cfg.device;
        assert_eq!(d.signal.kappa.sqrt_per_s(), 0.0985e6);
        assert_eq!(d.pump.delay_s, 75e-12);
        assert_eq!(d.grid.points, 512);
        assert!((d.signal.perimeter_m - 0.7178e-3).abs() < 1e-6);
        assert_eq!(d.pump.carrier.rad_per_s(), 0.5 * (1215.70e12 + 1214.45e12));
        assert!(matches!(d.dispersion, DispersionModel::Linear(m) if m.c1 == 1.0 && m.c2 == -1.0));
        assert_eq!(cfg.search.search.mu_axes.len(), 1);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = parse(MINIMAL).unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(parse(&text).unwrap(), cfg);
    }

    #[test]
    fn unitless_dimensioned_value_rejected() {
        let bad = MINIMAL.replacen("kappa = \"0.0985 sqrtTHz\"", "kappa = 0.0985", 1);
        let err = parse(&bad).unwrap_err().to_string();
        assert!(err.contains("kappa"), "{err}");
        let bad = MINIMAL.replacen("\"75 ps\"", "\"75\"", 1);
        assert!(parse(&bad).unwrap_err().to_string().contains("pump.delay"));
    }

    #[test]
    fn missing_key_named() {
        let bad = MINIMAL.replacen("kappa = \"0.0985 sqrtTHz\"", "", 1);
        let err = parse(&bad).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("kappa"));
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = MINIMAL.replacen("[pump]", "[pump]\nsigma = \"1 GHz\"", 1);
        assert!(parse(&bad).unwrap_err().to_string().contains("sigma"));
    }

    #[test]
    fn tap_length_mismatch_rejected() {
        let bad = MINIMAL.replacen("phases = [0.0, 1.0]", "phases = [0.0]", 1);
        assert!(parse(&bad).unwrap_err().to_string().contains("pump.phases"));
    }
}
