//! Phase mismatch and the sinc phase-matching function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TfmError};

/// Linearized mismatch dk = slope * (c1 ds + c2 di), detunings from the phase-matched point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearDispersion {
    pub c1: f64,
    pub c2: f64,
    /// s/m: maps rad/s of detuning to rad/m of mismatch.
    pub slope: f64,
    pub length_m: f64,
}

impl LinearDispersion {
    /// Slope keeping |L dk / 2| <= 0.05 for detunings within +/- `half_span` (rad/s).
    pub fn near_transparent(c1: f64, c2: f64, length_m: f64, half_span: f64) -> Result<Self> {
        let reach = (c1.abs() + c2.abs()) * half_span;
        if !(reach > 0.0) || !(length_m > 0.0) {
            return Err(TfmError::Domain("dispersion needs (c1, c2) != 0, positive length and window".into()));
        }
        Ok(Self { c1, c2, slope: 0.1 / (length_m * reach), length_m })
    }

    pub fn delta_k(&self, signal_detuning: f64, idler_detuning: f64) -> f64 {
        self.slope * (self.c1 * signal_detuning + self.c2 * idler_detuning)
    }
}

/// Quadratic k(w) = k1 (w - w_r) + k2/2 (w - w_r)^2 about the pump carrier w_r, entering
/// dk = k(w_p1) + k(w_p2) - k(w_s) - k(w_i) - nonlinear_shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorDispersion {
    pub k1: f64,
    pub k2: f64,
    /// gamma_0 * P in rad/m.
    pub nonlinear_shift: f64,
    pub length_m: f64,
}

impl TaylorDispersion {
    fn k(&self, offset: f64) -> f64 {
        self.k1 * offset + 0.5 * self.k2 * offset * offset
    }

    /// Offsets are absolute frequencies minus the pump carrier.
    pub fn delta_k(&self, pump_offset: f64, signal_offset: f64, idler_offset: f64) -> f64 {
        let partner = signal_offset + idler_offset - pump_offset;
        self.k(pump_offset) + self.k(partner) - self.k(signal_offset) - self.k(idler_offset) - self.nonlinear_shift
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum DispersionModel {
    Linear(LinearDispersion),
    Taylor(TaylorDispersion),
    /// Ideal broadband phase matching: pmf = 1.
    Unity,
}

/// A mixing event in detuning coordinates: each detuning is measured from its own
/// resonance centre; `offsets` are those centres relative to the pump carrier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingPoint {
    pub pump: f64,
    pub signal: f64,
    pub idler: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenterOffsets {
    pub signal: f64,
    pub idler: f64,
}

impl DispersionModel {
    /// True when the pmf depends on the signal and idler detunings only (no pump argument).
    pub fn is_pump_independent(&self) -> bool {
        !matches!(self, DispersionModel::Taylor(_))
    }

    pub fn delta_k(&self, at: MixingPoint, offsets: CenterOffsets) -> f64 {
        match self {
            DispersionModel::Linear(m) => m.delta_k(at.signal, at.idler),
            DispersionModel::Taylor(m) => m.delta_k(at.pump, offsets.signal + at.signal, offsets.idler + at.idler),
            DispersionModel::Unity => 0.0,
        }
    }

    pub fn pmf(&self, at: MixingPoint, offsets: CenterOffsets) -> Complex64 {
        match self {
            DispersionModel::Linear(m) => pmf_value(m.length_m, m.delta_k(at.signal, at.idler)),
            DispersionModel::Taylor(m) => pmf_value(m.length_m, self.delta_k(at, offsets)),
            DispersionModel::Unity => Complex64::new(1.0, 0.0),
        }
    }
}

pub fn delta_k_linear(model: &LinearDispersion, signal_detuning: f64, idler_detuning: f64) -> f64 {
    model.delta_k(signal_detuning, idler_detuning)
}

/// sinc(x) e^{ix} with x = L dk / 2.
pub fn pmf_value(length_m: f64, delta_k: f64) -> Complex64 {
    let x = 0.5 * length_m * delta_k;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    Complex64::from_polar(sinc, x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub degrees: f64,
    /// Set when c2 = 0 and the angle is the +/-90 degree limit.
    pub limiting: bool,
}

/// theta_si = -atan(c1 / c2) in degrees.
pub fn orientation_angle(c1: f64, c2: f64) -> Result<Orientation> {
    if c2 == 0.0 {
        if c1 == 0.0 {
            return Err(TfmError::Domain("orientation undefined for c1 = c2 = 0".into()));
        }
        return Ok(Orientation { degrees: -90.0 * c1.signum(), limiting: true });
    }
    Ok(Orientation { degrees: -(c1 / c2).atan().to_degrees(), limiting: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sgvm() -> LinearDispersion {
        LinearDispersion { c1: 1.0, c2: -1.0, slope: 3e-9, length_m: 0.7e-3 }
    }

    #[test]
    fn zero_detuning_is_matched() {
        assert_eq!(delta_k_linear(&sgvm(), 0.0, 0.0), 0.0);
        assert_eq!(delta_k_linear(&sgvm(), 4e9, 4e9), 0.0);
        assert_eq!(pmf_value(1e-3, 0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn antisymmetric_in_swap() {
        let m = sgvm();
        assert_eq!(m.delta_k(2e9, -2e9), -m.delta_k(-2e9, 2e9));
    }

    #[test]
    fn sinc_zero_and_quarter_point() {
        let l = 2.0;
        assert!(pmf_value(l, PI).norm() < 1e-15);
        let v = pmf_value(l, FRAC_PI_2);
        assert!((v.norm() - 2.0 / PI).abs() < 1e-15);
        assert!((v.arg() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn orientation_examples() {
        assert!((orientation_angle(1.0, -1.0).unwrap().degrees - 45.0).abs() < 1e-12);
        assert_eq!(orientation_angle(0.0, 2.0).unwrap().degrees, 0.0);
        assert!((orientation_angle(-1.0, -1.0).unwrap().degrees + 45.0).abs() < 1e-12);
        let lim = orientation_angle(1.0, 0.0).unwrap();
        assert!(lim.limiting && lim.degrees == -90.0);
    }

    #[test]
    fn default_slope_is_near_transparent() {
        let half = 54e9;
        let m = LinearDispersion::near_transparent(1.0, -1.0, 0.7178e-3, half).unwrap();
        let worst = 0.5 * m.length_m * m.delta_k(half, -half);
        assert!((worst.abs() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn taylor_first_order_cancels() {
        let t = TaylorDispersion { k1: 7e-9, k2: 0.0, nonlinear_shift: 0.0, length_m: 1e-3 };
        assert!(t.delta_k(3e9, 6.2e11 + 1e9, -6.2e11 + 2e9).abs() < 1e-9);
        let t = TaylorDispersion { k2: 1e-24, ..t };
        let dk = t.delta_k(0.0, 6.25e11, -6.25e11);
        assert!((dk + 1e-24 * 6.25e11 * 6.25e11).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sgvm_depends_on_difference_only(a in -5e10f64..5e10, b in -5e10f64..5e10, t in -5e10f64..5e10) {
            let m = DispersionModel::Linear(sgvm());
            let o = CenterOffsets { signal: 6.25e11, idler: -6.25e11 };
            let p = m.pmf(MixingPoint { pump: 0.0, signal: a, idler: b }, o);
            let q = m.pmf(MixingPoint { pump: 1e9, signal: a + t, idler: b + t }, o);
            prop_assert!((p - q).norm() < 1e-12);
        }

        #[test]
        fn pmf_bounded(l in 1e-5f64..1e-2, dk in -1e5f64..1e5) {
            prop_assert!(pmf_value(l, dk).norm() <= 1.0 + 1e-15);
        }
    }
}
