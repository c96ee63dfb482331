//! Run configuration.
//!
//! TOML (or JSON) with the sections below. Every key is optional; unknown
//! keys are rejected.
//!
//! ```toml
//! [run]
//! species = "p1"                 # p1 | nvh | nv
//!
//! [field]
//! magnitude_gauss = 78.6
//! direction = [1.0, 1.0, 1.0]
//!
//! [species.nv]                   # zero_field_splitting_mhz, g
//! [species.p1]                   # g, a_par_mhz, a_perp_mhz, quadrupole_mhz, nuclear_g
//! [species.nvh]                  # g, a_h_par_mhz, a_h_perp_mhz, a_n_par_mhz, a_n_perp_mhz
//!
//! [frequencies]                  # named frequencies, MHz (f1, f2, i..v, nvh_low, nvh_high, or new names)
//! f2 = 2652.0
//!
//! [pulse]
//! omega_mw_mhz = 3.3333333333    # 150 ns NV pi pulse
//! omega_rf_mhz = 8.3333333333    # default 500 / tpi_rf_ns
//! tau_ns = 1400.0
//! tpi_rf_ns = 60.0               # RF pulse length in DEER
//! f_mw = "f2"                    # MHz or a frequency name
//! f_rf = "ii"
//!
//! [ensemble]
//! delta_mhz = 0.05
//! lineshape = "lorentzian"       # lorentzian | gaussian
//! fwhm_mhz = 10.0
//!
//! [readout]
//! channel = "pc"                 # pc | pl
//! contrast = 0.038               # default 0.038 (pc), 0.10 (pl)
//! baseline = 1.0
//!
//! [sweep]
//! min = 100.0                    # MHz, default per species
//! max = 400.0
//! points = 600
//! tmax_ns = 600.0                # default per command
//! time_points = 601
//!
//! [transitions]
//! threshold = 0.05
//! min_electron_flip = 0.5
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{LineshapeConfig, LineshapeKind, ReadoutModel, Sweep, DEFAULT_DELTA_MHZ, DEFAULT_FWHM_MHZ};
use crate::error::{Error, Result};
use crate::hamiltonians::{self as ham, FieldConfig, SpeciesKind, SpinSpecies};
use crate::spectrum::Channel;
use crate::transitions::{LineOptions, DEFAULT_MIN_ELECTRON_FLIP, DEFAULT_THRESHOLD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub run: RunSection,
    pub field: FieldSection,
    pub species: SpeciesSection,
    pub frequencies: BTreeMap<String, f64>,
    pub pulse: PulseSection,
    pub ensemble: EnsembleSection,
    pub readout: ReadoutSection,
    pub sweep: SweepSection,
    pub transitions: TransitionsSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub species: SpeciesKind,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { species: SpeciesKind::P1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    pub magnitude_gauss: f64,
    pub direction: [f64; 3],
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { magnitude_gauss: 78.6, direction: [1.0, 1.0, 1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SpeciesSection {
    pub nv: NvParams,
    pub p1: P1Params,
    pub nvh: NvhParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NvParams {
    pub zero_field_splitting_mhz: f64,
    pub g: f64,
}

impl Default for NvParams {
    fn default() -> Self {
        Self { zero_field_splitting_mhz: ham::NV_ZERO_FIELD_SPLITTING_MHZ, g: ham::ELECTRON_G }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct P1Params {
    pub g: f64,
    pub a_par_mhz: f64,
    pub a_perp_mhz: f64,
    pub quadrupole_mhz: f64,
    pub nuclear_g: f64,
}

impl Default for P1Params {
    fn default() -> Self {
        Self {
            g: ham::ELECTRON_G,
            a_par_mhz: ham::P1_A_PAR_MHZ,
            a_perp_mhz: ham::P1_A_PERP_MHZ,
            quadrupole_mhz: ham::P1_Q_PERP_MHZ,
            nuclear_g: ham::N14_NUCLEAR_G,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NvhParams {
    pub g: f64,
    pub a_h_par_mhz: f64,
    pub a_h_perp_mhz: f64,
    pub a_n_par_mhz: f64,
    pub a_n_perp_mhz: f64,
}

impl Default for NvhParams {
    fn default() -> Self {
        Self {
            g: ham::ELECTRON_G,
            a_h_par_mhz: ham::NVH_A_H_PAR_MHZ,
            a_h_perp_mhz: ham::NVH_A_H_PERP_MHZ,
            a_n_par_mhz: ham::NVH_A_N_PAR_MHZ,
            a_n_perp_mhz: ham::NVH_A_N_PERP_MHZ,
        }
    }
}

/// A frequency in MHz or a name from the named-frequency table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FreqRef {
    Mhz(f64),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSection {
    pub omega_mw_mhz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_rf_mhz: Option<f64>,
    pub tau_ns: f64,
    pub tpi_rf_ns: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_mw: Option<FreqRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_rf: Option<FreqRef>,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self { omega_mw_mhz: 1.0 / 0.3, omega_rf_mhz: None, tau_ns: 1400.0, tpi_rf_ns: 60.0, f_mw: None, f_rf: None }
    }
}

impl PulseSection {
    /// Explicit Ω_rf, else the value making `tpi_rf_ns` a π pulse.
    pub fn omega_rf(&self) -> f64 {
        self.omega_rf_mhz.unwrap_or(500.0 / self.tpi_rf_ns)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub delta_mhz: f64,
    pub lineshape: LineshapeKind,
    pub fwhm_mhz: f64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { delta_mhz: DEFAULT_DELTA_MHZ, lineshape: LineshapeKind::Lorentzian, fwhm_mhz: DEFAULT_FWHM_MHZ }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSection {
    pub channel: Channel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast: Option<f64>,
    pub baseline: f64,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        Self { channel: Channel::Pc, contrast: None, baseline: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmax_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_points: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { min: None, max: None, points: 600, tmax_ns: None, time_points: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransitionsSection {
    pub threshold: f64,
    pub min_electron_flip: f64,
}

impl Default for TransitionsSection {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, min_electron_flip: DEFAULT_MIN_ELECTRON_FLIP }
    }
}

/// Default frequency window of a species, MHz.
pub fn default_window(kind: SpeciesKind) -> (f64, f64) {
    match kind {
        SpeciesKind::P1 => (100.0, 400.0),
        SpeciesKind::Nvh => (190.0, 260.0),
        SpeciesKind::Nv => (2550.0, 3200.0),
    }
}

impl SimConfig {
    pub fn field(&self) -> Result<FieldConfig> {
        FieldConfig::new(self.field.magnitude_gauss, self.field.direction)
    }

    /// Species with configured parameters; the axis is set per orientation
    /// by the caller.
    pub fn species(&self, kind: SpeciesKind) -> SpinSpecies {
        let axis = [1.0, 1.0, 1.0];
        match kind {
            SpeciesKind::Nv => {
                let p = &self.species.nv;
                SpinSpecies { g: p.g, zero_field_splitting_mhz: p.zero_field_splitting_mhz, ..SpinSpecies::nv(axis) }
            }
            SpeciesKind::P1 => {
                let p = &self.species.p1;
                let mut s = SpinSpecies { g: p.g, ..SpinSpecies::p1(axis) };
                let n = &mut s.nuclei[0];
                n.a_par_mhz = p.a_par_mhz;
                n.a_perp_mhz = p.a_perp_mhz;
                n.quadrupole_mhz = p.quadrupole_mhz;
                n.g_n = p.nuclear_g;
                s
            }
            SpeciesKind::Nvh => {
                let p = &self.species.nvh;
                let mut s = SpinSpecies { g: p.g, ..SpinSpecies::nvh(axis) };
                s.nuclei[0].a_par_mhz = p.a_h_par_mhz;
                s.nuclei[0].a_perp_mhz = p.a_h_perp_mhz;
                s.nuclei[1].a_par_mhz = p.a_n_par_mhz;
                s.nuclei[1].a_perp_mhz = p.a_n_perp_mhz;
                s
            }
        }
    }

    pub fn line_options(&self) -> LineOptions {
        LineOptions { threshold: self.transitions.threshold, min_electron_flip: self.transitions.min_electron_flip }
    }

    pub fn lineshape(&self) -> Result<LineshapeConfig> {
        LineshapeConfig::new(self.ensemble.lineshape, self.ensemble.fwhm_mhz)
    }

    pub fn readout(&self) -> ReadoutModel {
        let base = ReadoutModel::for_channel(self.readout.channel);
        ReadoutModel { contrast: self.readout.contrast.unwrap_or(base.contrast), baseline: self.readout.baseline, ..base }
    }

    /// Frequency sweep for `kind`, species window when unset.
    pub fn frequency_sweep(&self, kind: SpeciesKind) -> Result<Sweep> {
        let (lo, hi) = default_window(kind);
        Sweep::new(self.sweep.min.unwrap_or(lo), self.sweep.max.unwrap_or(hi), self.sweep.points)
    }

    /// Range checks; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let finite = |key: &str, v: f64| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{key}: value must be finite")))
            }
        };
        let positive = |key: &str, v: f64| -> Result<()> {
            finite(key, v)?;
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{key}: must be positive, got {v}")))
            }
        };
        let non_negative = |key: &str, v: f64| -> Result<()> {
            finite(key, v)?;
            if v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{key}: must be non-negative, got {v}")))
            }
        };
        non_negative("field.magnitude_gauss", self.field.magnitude_gauss)?;
        for v in self.field.direction {
            finite("field.direction", v)?;
        }
        if self.field.direction.iter().all(|&v| v == 0.0) {
            return Err(Error::Config("field.direction: must be a non-zero vector".into()));
        }
        let s = &self.species;
        finite("species.nv.zero_field_splitting_mhz", s.nv.zero_field_splitting_mhz)?;
        positive("species.nv.g", s.nv.g)?;
        positive("species.p1.g", s.p1.g)?;
        positive("species.nvh.g", s.nvh.g)?;
        for (k, v) in [
            ("species.p1.a_par_mhz", s.p1.a_par_mhz),
            ("species.p1.a_perp_mhz", s.p1.a_perp_mhz),
            ("species.p1.quadrupole_mhz", s.p1.quadrupole_mhz),
            ("species.p1.nuclear_g", s.p1.nuclear_g),
            ("species.nvh.a_h_par_mhz", s.nvh.a_h_par_mhz),
            ("species.nvh.a_h_perp_mhz", s.nvh.a_h_perp_mhz),
            ("species.nvh.a_n_par_mhz", s.nvh.a_n_par_mhz),
            ("species.nvh.a_n_perp_mhz", s.nvh.a_n_perp_mhz),
        ] {
            finite(k, v)?;
        }
        for (name, v) in &self.frequencies {
            finite(&format!("frequencies.{name}"), *v)?;
        }
        positive("pulse.omega_mw_mhz", self.pulse.omega_mw_mhz)?;
        if let Some(v) = self.pulse.omega_rf_mhz {
            non_negative("pulse.omega_rf_mhz", v)?;
        }
        non_negative("pulse.tau_ns", self.pulse.tau_ns)?;
        positive("pulse.tpi_rf_ns", self.pulse.tpi_rf_ns)?;
        if self.pulse.tpi_rf_ns > 2.0 * self.pulse.tau_ns {
            return Err(Error::Config(format!(
                "pulse.tpi_rf_ns: RF pulse of {} ns does not fit in the echo (at most 2·tau_ns = {} ns)",
                self.pulse.tpi_rf_ns,
                2.0 * self.pulse.tau_ns
            )));
        }
        for (key, f) in [("pulse.f_mw", &self.pulse.f_mw), ("pulse.f_rf", &self.pulse.f_rf)] {
            if let Some(FreqRef::Mhz(v)) = f {
                finite(key, *v)?;
            }
        }
        non_negative("ensemble.delta_mhz", self.ensemble.delta_mhz)?;
        positive("ensemble.fwhm_mhz", self.ensemble.fwhm_mhz)?;
        if let Some(c) = self.readout.contrast {
            finite("readout.contrast", c)?;
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Config(format!("readout.contrast: must lie in [0, 1], got {c}")));
            }
        }
        finite("readout.baseline", self.readout.baseline)?;
        for (k, v) in [("sweep.min", self.sweep.min), ("sweep.max", self.sweep.max)] {
            if let Some(v) = v {
                finite(k, v)?;
            }
        }
        if let (Some(a), Some(b)) = (self.sweep.min, self.sweep.max) {
            if !(b > a) {
                return Err(Error::Config(format!("sweep.max: must exceed sweep.min ({b} <= {a})")));
            }
        }
        if self.sweep.points < 2 {
            return Err(Error::Config(format!("sweep.points: need at least 2, got {}", self.sweep.points)));
        }
        if let Some(t) = self.sweep.tmax_ns {
            positive("sweep.tmax_ns", t)?;
        }
        if let Some(n) = self.sweep.time_points {
            if n < 2 {
                return Err(Error::Config(format!("sweep.time_points: need at least 2, got {n}")));
            }
        }
        non_negative("transitions.threshold", self.transitions.threshold)?;
        non_negative("transitions.min_electron_flip", self.transitions.min_electron_flip)?;
        Ok(())
    }
}

/// Line of `section.key = …` in TOML text, for error messages.
fn key_line(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.rsplit_once('.')?;
    let mut current = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(n + 1);
                }
            }
        }
    }
    None
}

fn locate(err: Error, text: &str) -> Error {
    match err {
        Error::Config(msg) => {
            let key = msg.split(':').next().unwrap_or("");
            match key_line(text, key) {
                Some(line) => Error::Config(format!("line {line}: {msg}")),
                None => Error::Config(msg),
            }
        }
        other => other,
    }
}

/// Parses config text. JSON is recognized by a leading `{`; a JSON run
/// result is accepted too and its embedded config is used.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let cfg: SimConfig = if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("JSON config: {e}")))?;
        let inner = match value.get("config") {
            Some(c) if value.get("command").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| Error::Config(format!("JSON config: {e}")))?
    } else {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?
    };
    cfg.validate().map_err(|e| locate(e, text))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// TOML text of a config.
pub fn to_toml(cfg: &SimConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
}
