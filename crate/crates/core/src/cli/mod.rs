//! Command dispatch shared by the binary and the tests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub mod config;
pub mod output;

pub use config::{load_config, parse_config, FreqRef, SimConfig};
pub use output::{format_g, write_file, write_output, Format};

use crate::ensemble::{self, EnsembleModel, Sweep};
use crate::error::{Error, Result};
use crate::hamiltonians::{calibrate_field, SpeciesKind};
use crate::pulse::{self, PairSystem, PulseSequence, SequenceContext};
use crate::spectrum::{Channel, Spectrum};
use crate::transitions::{stick_spectrum, StickSpectrum};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Odmr,
    Rabi,
    Deer,
    DeerRabi,
    Calibrate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Odmr => "odmr",
            Command::Rabi => "rabi",
            Command::Deer => "deer",
            Command::DeerRabi => "deer-rabi",
            Command::Calibrate => "calibrate",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Command::Spectrum, Command::Odmr, Command::Rabi, Command::Deer, Command::DeerRabi, Command::Calibrate]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown command '{s}'")))
    }
}

/// Command-line overrides of config values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub species: Option<SpeciesKind>,
    pub field_gauss: Option<f64>,
    pub tau_ns: Option<f64>,
    pub f_rf_mhz: Option<f64>,
    pub f_min_mhz: Option<f64>,
    pub f_max_mhz: Option<f64>,
    pub points: Option<usize>,
    pub t_rf_ns: Option<f64>,
    pub t_max_ns: Option<f64>,
    pub channel: Option<Channel>,
    pub f1_mhz: Option<f64>,
    pub f2_mhz: Option<f64>,
}

fn conflict(flag: &str, cmd: Command) -> Error {
    Error::InvalidArgument(format!("--{flag} does not apply to '{}'", cmd.name()))
}

/// Folds flags into `cfg`, rejecting flags the command does not use.
pub fn apply_overrides(cmd: Command, cfg: &SimConfig, ov: &Overrides) -> Result<SimConfig> {
    use Command::*;
    let mut c = cfg.clone();
    let allow = |flag: &str, set: bool, ok: &[Command]| if set && !ok.contains(&cmd) { Err(conflict(flag, cmd)) } else { Ok(()) };
    allow("tau", ov.tau_ns.is_some(), &[Deer, DeerRabi])?;
    allow("frf", ov.f_rf_mhz.is_some(), &[DeerRabi])?;
    allow("fmin", ov.f_min_mhz.is_some(), &[Spectrum, Odmr, Deer])?;
    allow("fmax", ov.f_max_mhz.is_some(), &[Spectrum, Odmr, Deer])?;
    allow("points", ov.points.is_some(), &[Spectrum, Odmr, Deer, Rabi, DeerRabi])?;
    allow("trf", ov.t_rf_ns.is_some(), &[Deer])?;
    allow("tmax", ov.t_max_ns.is_some(), &[Rabi, DeerRabi])?;
    allow("channel", ov.channel.is_some(), &[Odmr, Rabi, Deer, DeerRabi])?;
    allow("f1", ov.f1_mhz.is_some(), &[Calibrate])?;
    allow("f2", ov.f2_mhz.is_some(), &[Calibrate])?;
    if let Some(s) = ov.species {
        match cmd {
            Spectrum | Deer | DeerRabi => c.run.species = s,
            _ if s == SpeciesKind::Nv => {}
            _ => return Err(conflict("species", cmd)),
        }
    }
    if matches!(cmd, Deer | DeerRabi) && c.run.species == SpeciesKind::Nv {
        return Err(Error::InvalidArgument("DEER needs a bath species (p1 or nvh)".into()));
    }
    if let Some(b) = ov.field_gauss {
        c.field.magnitude_gauss = b;
    }
    if let Some(t) = ov.tau_ns {
        c.pulse.tau_ns = t;
    }
    if let Some(f) = ov.f_rf_mhz {
        c.pulse.f_rf = Some(FreqRef::Mhz(f));
    }
    c.sweep.min = ov.f_min_mhz.or(c.sweep.min);
    c.sweep.max = ov.f_max_mhz.or(c.sweep.max);
    if let Some(n) = ov.points {
        match cmd {
            Rabi | DeerRabi => c.sweep.time_points = Some(n),
            _ => c.sweep.points = n,
        }
    }
    if let Some(t) = ov.t_rf_ns {
        // Keep the RF amplitude fixed while changing the pulse length.
        c.pulse.omega_rf_mhz = Some(c.pulse.omega_rf());
        c.pulse.tpi_rf_ns = t;
    }
    c.sweep.tmax_ns = ov.t_max_ns.or(c.sweep.tmax_ns);
    if let Some(ch) = ov.channel {
        if ch != c.readout.channel {
            c.readout.channel = ch;
            c.readout.contrast = None;
        }
    }
    if let Some(f) = ov.f1_mhz {
        c.frequencies.insert("f1".into(), f);
    }
    if let Some(f) = ov.f2_mhz {
        c.frequencies.insert("f2".into(), f);
    }
    c.validate()?;
    Ok(c)
}

/// Stick spectra of the NV and, for a bath command, of `kind`.
struct Context {
    nv: StickSpectrum,
    bath: Option<StickSpectrum>,
    names: BTreeMap<String, f64>,
}

impl Context {
    fn build(cfg: &SimConfig, kind: Option<SpeciesKind>) -> Result<Self> {
        let field = cfg.field()?;
        let opts = cfg.line_options();
        let nv = stick_spectrum(&cfg.species(SpeciesKind::Nv), &field, &opts)?;
        let bath = match kind {
            Some(SpeciesKind::Nv) | None => None,
            Some(k) => Some(stick_spectrum(&cfg.species(k), &field, &opts)?),
        };
        let mut names = nv.named_frequencies();
        if let Some(b) = &bath {
            names.extend(b.named_frequencies());
        }
        names.extend(cfg.frequencies.iter().map(|(k, v)| (k.to_ascii_lowercase(), *v)));
        Ok(Self { nv, bath, names })
    }

    fn lookup(&self, r: &FreqRef, key: &str) -> Result<f64> {
        match r {
            FreqRef::Mhz(v) => Ok(*v),
            FreqRef::Name(n) => self
                .names
                .get(&n.to_ascii_lowercase())
                .copied()
                .ok_or_else(|| Error::Config(format!("{key}: unknown frequency name '{n}'"))),
        }
    }

    fn named(&self, name: &str) -> Result<f64> {
        self.lookup(&FreqRef::Name(name.into()), name)
    }
}

fn default_rf_name(kind: SpeciesKind) -> Option<&'static str> {
    match kind {
        SpeciesKind::P1 => Some("ii"),
        SpeciesKind::Nvh => Some("nvh_low"),
        SpeciesKind::Nv => None,
    }
}

fn default_time(cmd: Command) -> (f64, usize) {
    match cmd {
        Command::Rabi => (600.0, 601),
        _ => (300.0, 301),
    }
}

/// Fills every default so the config alone reproduces the run.
pub fn resolve(cmd: Command, cfg: &SimConfig) -> Result<SimConfig> {
    cfg.validate()?;
    let kind = if cmd == Command::Odmr { SpeciesKind::Nv } else { cfg.run.species };
    let ctx = Context::build(cfg, Some(kind))?;
    let mut c = cfg.clone();
    let sweep = cfg.frequency_sweep(kind)?;
    c.sweep.min = Some(sweep.min);
    c.sweep.max = Some(sweep.max);
    let (tmax, tn) = default_time(cmd);
    c.sweep.tmax_ns = Some(cfg.sweep.tmax_ns.unwrap_or(tmax));
    c.sweep.time_points = Some(cfg.sweep.time_points.unwrap_or(tn));
    c.pulse.omega_rf_mhz = Some(cfg.pulse.omega_rf());
    c.readout.contrast = Some(cfg.readout().contrast);
    let f_mw = cfg.pulse.f_mw.clone().unwrap_or(FreqRef::Name("f2".into()));
    c.pulse.f_mw = Some(FreqRef::Mhz(ctx.lookup(&f_mw, "pulse.f_mw")?));
    c.pulse.f_rf = match (&cfg.pulse.f_rf, default_rf_name(kind)) {
        (Some(r), _) => Some(FreqRef::Mhz(ctx.lookup(r, "pulse.f_rf")?)),
        (None, Some(n)) => ctx.names.get(n).map(|v| FreqRef::Mhz(*v)),
        (None, None) => None,
    };
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub f1_mhz: f64,
    pub f2_mhz: f64,
    pub field_gauss: f64,
}

/// Result of one command with the resolved config that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub version: String,
    pub command: Command,
    pub config: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Spectrum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sticks: Option<StickSpectrum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
}

fn ensemble_model(cfg: &SimConfig) -> Result<EnsembleModel> {
    Ok(EnsembleModel {
        delta_mhz: cfg.ensemble.delta_mhz,
        tau_ns: cfg.pulse.tau_ns,
        omega_rf_mhz: cfg.pulse.omega_rf(),
        t_rf_ns: cfg.pulse.tpi_rf_ns,
        lineshape: cfg.lineshape()?,
    })
}

fn mhz(r: &Option<FreqRef>, key: &str) -> Result<f64> {
    match r {
        Some(FreqRef::Mhz(v)) => Ok(*v),
        _ => Err(Error::Config(format!("{key}: no frequency available"))),
    }
}

/// Runs `cmd` on `config`; defaults are resolved first.
pub fn run_command(cmd: Command, config: &SimConfig) -> Result<RunResult> {
    let cfg = resolve(cmd, config)?;
    let kind = cfg.run.species;
    let mut result = RunResult { version: VERSION.into(), command: cmd, config: cfg.clone(), series: None, sticks: None, calibration: None };
    let readout = cfg.readout();
    match cmd {
        Command::Spectrum => {
            let ctx = Context::build(&cfg, Some(kind))?;
            let sticks = ctx.bath.unwrap_or(ctx.nv);
            result.series = Some(ensemble::broaden(&sticks, &cfg.lineshape()?, &cfg.frequency_sweep(kind)?)?);
            result.sticks = Some(sticks);
        }
        Command::Odmr => {
            let ctx = Context::build(&cfg, None)?;
            let sweep = cfg.frequency_sweep(SpeciesKind::Nv)?;
            result.series = Some(ensemble::odmr_spectrum(&ctx.nv, &cfg.lineshape()?, &sweep, &readout)?);
            result.sticks = Some(ctx.nv);
        }
        Command::Rabi => {
            let ctx = Context::build(&cfg, None)?;
            let f_nv = ctx.named("f2")?;
            let f_drive = mhz(&cfg.pulse.f_mw, "pulse.f_mw")?;
            let system = PairSystem::bare(f_nv, 0.0, 0.0)?;
            let (tmax, n) = (cfg.sweep.tmax_ns.unwrap_or(600.0), cfg.sweep.time_points.unwrap_or(601));
            let trace = pulse::rabi_trace(&system, cfg.pulse.omega_mw_mhz, f_drive, tmax, n)?;
            result.series = Some(ensemble::readout_spectrum(&trace, &readout)?);
        }
        Command::Deer => {
            let ctx = Context::build(&cfg, Some(kind))?;
            let sticks = ctx.bath.ok_or_else(|| Error::InvalidArgument("DEER needs a bath species".into()))?;
            let echo = ensemble::deer_spectrum(&ensemble_model(&cfg)?, &sticks, &cfg.frequency_sweep(kind)?)?;
            result.series = Some(ensemble::readout_spectrum(&echo, &readout)?);
            result.sticks = Some(sticks);
        }
        Command::DeerRabi => {
            let ctx = Context::build(&cfg, Some(kind))?;
            let sticks = ctx.bath.ok_or_else(|| Error::InvalidArgument("DEER needs a bath species".into()))?;
            let f_rf = mhz(&cfg.pulse.f_rf, "pulse.f_rf")?;
            let (tmax, n) = (cfg.sweep.tmax_ns.unwrap_or(300.0), cfg.sweep.time_points.unwrap_or(301));
            let echo = ensemble::deer_rabi_ensemble(&ensemble_model(&cfg)?, &sticks, f_rf, tmax, n)?;
            result.series = Some(ensemble::readout_spectrum(&echo, &readout)?);
        }
        Command::Calibrate => {
            let ctx = Context::build(&cfg, None)?;
            let (f1, f2) = (ctx.named("f1")?, ctx.named("f2")?);
            let field_gauss = calibrate_field(f1, f2, cfg.species.nv.g)?;
            result.calibration = Some(Calibration { f1_mhz: f1, f2_mhz: f2, field_gauss });
        }
    }
    Ok(result)
}

/// Named frequencies and Rabi frequencies for sequence text.
pub fn sequence_context(cfg: &SimConfig) -> Result<SequenceContext> {
    let ctx = Context::build(cfg, Some(cfg.run.species))?;
    let mut seq = SequenceContext::new(cfg.pulse.omega_mw_mhz, cfg.pulse.omega_rf());
    for (k, v) in &ctx.names {
        seq.insert(k, *v);
    }
    Ok(seq)
}

/// Reads a pulse sequence file, resolving names against `cfg`.
pub fn load_sequence(path: &Path, cfg: &SimConfig) -> Result<PulseSequence> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    pulse::parse_sequence(&text, &sequence_context(cfg)?)
}

/// Frequency sweep actually used by a resolved config.
pub fn resolved_sweep(cfg: &SimConfig, cmd: Command) -> Result<Sweep> {
    cfg.frequency_sweep(if cmd == Command::Odmr { SpeciesKind::Nv } else { cfg.run.species })
}
