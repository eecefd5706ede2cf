//! Result files: atomic writes, 9-significant-digit numbers, binary JSA dumps.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use tempfile::NamedTempFile;

use tfm_core::jsa_engine::Jsa;
use tfm_core::spectral_core::{Field1D, SpectralGrid};

use crate::CliError;

/// Round to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Text form of `sig9(x)`: shortest representation of the rounded value.
pub fn fmt9(x: f64) -> String {
    format!("{}", sig9(x))
}

/// Round every number in a JSON tree to 9 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if let Some(r) = serde_json::Number::from_f64(sig9(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn to_json_value<T: Serialize>(value: &T) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Io(format!("encoding JSON: {e}")))?;
    round_json(&mut v);
    Ok(v)
}

pub fn json_text<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = to_json_value(value)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(format!("encoding JSON: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Write via a temporary file in the same directory, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct GridMeta {
    center_rad_s: f64,
    half_span_rad_s: f64,
    points: usize,
    spacing_rad_s: f64,
}

impl GridMeta {
    fn of(g: &SpectralGrid) -> Self {
        Self {
            center_rad_s: g.center().rad_per_s(),
            half_span_rad_s: g.half_span().rad_per_s(),
            points: g.len(),
            spacing_rad_s: g.spacing(),
        }
    }
}

#[derive(Serialize)]
struct JsaSidecar<'a> {
    data_file: &'a str,
    layout: &'static str,
    dtype: &'static str,
    shape: [usize; 2],
    units: &'static str,
    signal_grid: GridMeta,
    idler_grid: GridMeta,
}

/// Little-endian f64 pairs (re, im); signal index fastest, idler index slowest.
pub fn jsa_bytes(jsa: &Jsa) -> Vec<u8> {
    let mut out = Vec::with_capacity(jsa.amplitude.len() * 16);
    // DMatrix storage is column-major with rows indexing the signal, so signal is fastest.
    for v in jsa.amplitude.iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn write_jsa(dir: &Path, stem: &str, jsa: &Jsa) -> Result<(), CliError> {
    let bin = format!("{stem}.bin");
    write_atomic(&dir.join(&bin), &jsa_bytes(jsa))?;
    let meta = JsaSidecar {
        data_file: &bin,
        layout: "row-major [idler][signal], signal index fastest",
        dtype: "complex128 as little-endian f64 (re, im) pairs",
        shape: [jsa.grid_i.len(), jsa.grid_s.len()],
        units: "frequencies in rad/s; amplitude normalized so that sum |F|^2 dw_s dw_i = 1",
        signal_grid: GridMeta::of(&jsa.grid_s),
        idler_grid: GridMeta::of(&jsa.grid_i),
    };
    write_atomic(&dir.join(format!("{stem}.json")), json_text(&meta)?.as_bytes())
}

pub fn jsa_csv(jsa: &Jsa) -> String {
    let mut s = String::from("omega_s_rad_s,omega_i_rad_s,re,im\n");
    for k in 0..jsa.grid_i.len() {
        for j in 0..jsa.grid_s.len() {
            let v = jsa.amplitude[(j, k)];
            let _ = writeln!(s, "{},{},{},{}", fmt9(jsa.grid_s.point(j)), fmt9(jsa.grid_i.point(k)), fmt9(v.re), fmt9(v.im));
        }
    }
    s
}

/// Column name, sampled field and the real-valued map applied to each sample.
pub type SpectrumColumn<'a> = (&'a str, &'a Field1D, fn(&num_complex::Complex64) -> f64);

/// One row per grid point: absolute frequency, detuning, then one column per named series.
pub fn spectrum_csv(columns: &[SpectrumColumn]) -> Result<String, CliError> {
    let first = columns.first().ok_or_else(|| CliError::Io("no spectrum columns".into()))?.1;
    let mut s = String::from("omega_rad_s,detuning_rad_s");
    for (name, f, _) in columns {
        if f.values.len() != first.values.len() {
            return Err(CliError::Io(format!("spectrum column {name} has mismatched length")));
        }
        let _ = write!(s, ",{name}");
    }
    s.push('\n');
    for j in 0..first.values.len() {
        let _ = write!(s, "{},{}", fmt9(first.grid.point(j)), fmt9(first.grid.detuning(j)));
        for (_, f, map) in columns {
            let _ = write!(s, ",{}", fmt9(map(&f.values[j])));
        }
        s.push('\n');
    }
    Ok(s)
}
