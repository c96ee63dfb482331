use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunResult;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

/// `%.12g`-style formatting, independent of locale.
pub fn format_g(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, v);
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if exp < -4 || exp >= p as i32 {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv(result: &RunResult) -> String {
    let mut out = String::new();
    if let Some(s) = &result.series {
        writeln!(out, "{},{}", s.axis_kind.column(), s.signal_kind.column()).unwrap();
        for (a, v) in s.axis.iter().zip(&s.signal) {
            writeln!(out, "{},{}", format_g(*a, 12), format_g(*v, 12)).unwrap();
        }
    } else if let Some(c) = &result.calibration {
        out.push_str("f1_mhz,f2_mhz,field_gauss\n");
        writeln!(out, "{},{},{}", format_g(c.f1_mhz, 12), format_g(c.f2_mhz, 12), format_g(c.field_gauss, 12)).unwrap();
    }
    out
}

/// Serialized result; CSV carries the primary series only.
pub fn write_output(result: &RunResult, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => Ok(csv(result).into_bytes()),
        Format::Json => {
            let mut text = serde_json::to_string_pretty(result).map_err(|e| Error::Config(format!("cannot serialize result: {e}")))?;
            text.push('\n');
            Ok(text.into_bytes())
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
