use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pcdeer::cli::{self, Command, Format, Overrides, SimConfig};
use pcdeer::hamiltonians::SpeciesKind;
use pcdeer::spectrum::Channel;
use pcdeer::Error;

#[derive(Parser)]
#[command(name = "pcdeer", version, about = "NV/P1/NVH spin spectra and DEER simulation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stick lines and broadened spectrum of a species.
    Spectrum(Flags),
    /// cw NV spectrum through a readout channel.
    Odmr(Flags),
    /// NV Rabi oscillation against MW pulse length.
    Rabi(Flags),
    /// DEER spectrum over an RF sweep.
    Deer(Flags),
    /// DEER echo against RF pulse length at fixed RF frequency.
    DeerRabi(Flags),
    /// Field from the two aligned NV lines.
    Calibrate(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum SpeciesArg {
    Nv,
    P1,
    Nvh,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Pl,
    Pc,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Flags {
    #[arg(long, value_enum)]
    species: Option<SpeciesArg>,
    /// Field magnitude, G.
    #[arg(long)]
    field: Option<f64>,
    /// DEER free evolution, ns.
    #[arg(long)]
    tau: Option<f64>,
    /// RF frequency, MHz.
    #[arg(long)]
    frf: Option<f64>,
    #[arg(long)]
    fmin: Option<f64>,
    #[arg(long)]
    fmax: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// RF pulse length, ns.
    #[arg(long)]
    trf: Option<f64>,
    /// Longest pulse in a time trace, ns.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long, value_enum)]
    channel: Option<ChannelArg>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Upper aligned NV line, MHz.
    #[arg(long)]
    f1: Option<f64>,
    /// Lower aligned NV line, MHz.
    #[arg(long)]
    f2: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            species: self.species.map(|s| match s {
                SpeciesArg::Nv => SpeciesKind::Nv,
                SpeciesArg::P1 => SpeciesKind::P1,
                SpeciesArg::Nvh => SpeciesKind::Nvh,
            }),
            field_gauss: self.field,
            tau_ns: self.tau,
            f_rf_mhz: self.frf,
            f_min_mhz: self.fmin,
            f_max_mhz: self.fmax,
            points: self.points,
            t_rf_ns: self.trf,
            t_max_ns: self.tmax,
            channel: self.channel.map(|c| match c {
                ChannelArg::Pl => Channel::Pl,
                ChannelArg::Pc => Channel::Pc,
            }),
            f1_mhz: self.f1,
            f2_mhz: self.f2,
        }
    }
}

fn run(command: Command, flags: &Flags) -> Result<(), Error> {
    let base = match &flags.config {
        Some(p) => cli::load_config(p)?,
        None => SimConfig::default(),
    };
    let cfg = cli::apply_overrides(command, &base, &flags.overrides())?;
    let result = cli::run_command(command, &cfg)?;
    let format = match flags.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let bytes = cli::write_output(&result, format)?;
    match &flags.out {
        Some(p) => cli::write_file(p, &bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes).and_then(|_| out.flush()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, flags) = match &parsed.command {
        Cmd::Spectrum(f) => (Command::Spectrum, f),
        Cmd::Odmr(f) => (Command::Odmr, f),
        Cmd::Rabi(f) => (Command::Rabi, f),
        Cmd::Deer(f) => (Command::Deer, f),
        Cmd::DeerRabi(f) => (Command::DeerRabi, f),
        Cmd::Calibrate(f) => (Command::Calibrate, f),
    };
    match run(command, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
