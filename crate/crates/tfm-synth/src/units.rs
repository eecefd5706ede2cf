//! Unit-suffixed quantities such as "7.26 GHz" or "75 ps".

use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Angular frequency, rates and couplings. THz/GHz/MHz are 1e12/1e9/1e6 rad/s; the
    /// `2pi` prefixed forms multiply by 2 pi.
    Angular,
    SqrtRate,
    Time,
    Length,
    Speed,
    Area,
    Power,
    /// Cyclic frequency in Hz (repetition rates).
    Cyclic,
    KerrIndex,
    /// s/m, for mismatch slopes and k'.
    InverseSpeed,
    /// s^2/m, for k''.
    Dispersion,
    Wavenumber,
}

impl Kind {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Kind::Angular => &[
                ("rad/s", 1.0),
                ("THz", 1e12),
                ("GHz", 1e9),
                ("MHz", 1e6),
                ("2piTHz", TAU * 1e12),
                ("2piGHz", TAU * 1e9),
                ("2piMHz", TAU * 1e6),
            ],
            Kind::SqrtRate => &[("1/sqrt(s)", 1.0), ("sqrtTHz", 1e6), ("sqrtGHz", 31_622.776_601_683_792)],
            Kind::Time => &[("s", 1.0), ("ns", 1e-9), ("ps", 1e-12), ("fs", 1e-15)],
            Kind::Length => &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("nm", 1e-9)],
            Kind::Speed => &[("m/s", 1.0)],
            Kind::Area => &[("m2", 1.0), ("um2", 1e-12)],
            Kind::Power => &[("W", 1.0), ("mW", 1e-3), ("uW", 1e-6)],
            Kind::Cyclic => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)],
            Kind::KerrIndex => &[("m2/W", 1.0)],
            Kind::InverseSpeed => &[("s/m", 1.0)],
            Kind::Dispersion => &[("s2/m", 1.0)],
            Kind::Wavenumber => &[("1/m", 1.0)],
        }
    }

    /// Unit used when writing values back out; round-trips exactly.
    pub fn canonical(self) -> &'static str {
        self.units()[0].0
    }
}

/// Parse "<number> <unit>" (whitespace optional) into SI units of `kind`.
pub fn parse_quantity(text: &str, kind: Kind) -> Result<f64, String> {
    let s = text.trim();
    let split = (1..=s.len())
        .rev()
        .filter(|&i| s.is_char_boundary(i))
        .find(|&i| s[..i].trim().parse::<f64>().is_ok())
        .ok_or_else(|| format!("\"{text}\" does not start with a number"))?;
    let value: f64 = s[..split].trim().parse().expect("checked above");
    let unit = s[split..].trim();
    if unit.is_empty() {
        return Err(format!("\"{text}\" has no unit; expected one of {}", unit_list(kind)));
    }
    let scale = kind
        .units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, f)| *f)
        .ok_or_else(|| format!("unknown unit \"{unit}\" in \"{text}\"; expected one of {}", unit_list(kind)))?;
    if !value.is_finite() {
        return Err(format!("\"{text}\" is not finite"));
    }
    Ok(value * scale)
}

pub fn format_quantity(value: f64, kind: Kind) -> String {
    format!("{value:e} {}", kind.canonical())
}

fn unit_list(kind: Kind) -> String {
    kind.units().iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_table_units() {
        assert_eq!(parse_quantity("1215.70 THz", Kind::Angular).unwrap(), 1215.70e12);
        assert_eq!(parse_quantity("7.26 GHz", Kind::Angular).unwrap(), 7.26e9);
        assert!((parse_quantity("4.02 2piGHz", Kind::Angular).unwrap() - 4.02 * TAU * 1e9).abs() < 1e-3);
        assert_eq!(parse_quantity("75 ps", Kind::Time).unwrap(), 75e-12);
        assert!((parse_quantity("0.0985 sqrtTHz", Kind::SqrtRate).unwrap() - 98_500.0).abs() < 1e-9);
        assert_eq!(parse_quantity("4mW", Kind::Power).unwrap(), 4e-3);
        assert_eq!(parse_quantity("500 MHz", Kind::Cyclic).unwrap(), 5e8);
        assert_eq!(parse_quantity("7.14e7 m/s", Kind::Speed).unwrap(), 7.14e7);
        assert_eq!(parse_quantity("-1e-3 W", Kind::Power).unwrap(), -1e-3);
    }

    #[test]
    fn rejects_missing_or_wrong_units() {
        assert!(parse_quantity("0.0985", Kind::SqrtRate).unwrap_err().contains("no unit"));
        assert!(parse_quantity("75 GHz", Kind::Time).unwrap_err().contains("unknown unit"));
        assert!(parse_quantity("GHz", Kind::Angular).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        for v in [1.2157e15, 7.26e9, 0.1 + 0.2, 98_500.0] {
            assert_eq!(parse_quantity(&format_quantity(v, Kind::Angular), Kind::Angular).unwrap(), v);
        }
    }
}
