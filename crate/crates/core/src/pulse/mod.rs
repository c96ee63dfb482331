//! Pulse sequences on an NV two-level sensor coupled to one bath spin.
//!
//! Blocks are rectangular. The NV is reduced to its mS = 0 ↔ −1 transition
//! with |0⟩ the optically bright state.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod engine;
pub mod parse;
pub mod system;

pub use engine::{
    deer_echo, deer_point, deer_rabi_trace, deer_sequence, hahn_echo_sequence, initial_state, rabi_trace, run_sequence,
    DeerTiming, RunOptions, RunOutcome,
};
pub use parse::{parse_sequence, ParseError, SequenceContext};
pub use system::{rotating_frame_hamiltonian, BathModel, BathSpin, Frames, PairSystem, DEFAULT_NV_RABI_MHZ};

/// Rectangular drive pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub carrier_mhz: f64,
    pub rabi_mhz: f64,
    #[serde(default)]
    pub phase_rad: f64,
    pub duration_ns: f64,
}

impl Pulse {
    pub fn new(carrier_mhz: f64, rabi_mhz: f64, phase_rad: f64, duration_ns: f64) -> Result<Self> {
        let p = Self { carrier_mhz, rabi_mhz, phase_rad, duration_ns };
        p.validate()?;
        Ok(p)
    }

    /// Pulse of Rabi frequency Ω rotating by `angle_rad`.
    pub fn with_angle(carrier_mhz: f64, rabi_mhz: f64, angle_rad: f64) -> Result<Self> {
        if !(rabi_mhz > 0.0) || !rabi_mhz.is_finite() {
            return Err(Error::InvalidArgument(format!("a rotation angle needs a positive Rabi frequency, got {rabi_mhz} MHz")));
        }
        Self::new(carrier_mhz, rabi_mhz, 0.0, angle_rad / (2.0 * std::f64::consts::PI * rabi_mhz) * 1e3)
    }

    /// Rotation angle 2π·Ω·t in radians.
    pub fn angle_rad(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.rabi_mhz * self.duration_ns * 1e-3
    }

    fn validate(&self) -> Result<()> {
        if !self.carrier_mhz.is_finite() || !self.phase_rad.is_finite() {
            return Err(Error::InvalidSequence("pulse carrier and phase must be finite".into()));
        }
        if !(self.rabi_mhz >= 0.0) || !self.rabi_mhz.is_finite() {
            return Err(Error::InvalidSequence(format!("Rabi frequency must be finite and non-negative, got {}", self.rabi_mhz)));
        }
        check_duration(self.duration_ns)
    }
}

fn check_duration(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidSequence(format!("duration must be finite and non-negative, got {t} ns")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "block", rename_all = "snake_case")]
pub enum PulseBlock {
    Mw(Pulse),
    Rf(Pulse),
    Delay { duration_ns: f64 },
    Readout,
}

impl PulseBlock {
    pub fn delay(duration_ns: f64) -> Self {
        PulseBlock::Delay { duration_ns }
    }

    pub fn duration_ns(&self) -> f64 {
        match self {
            PulseBlock::Mw(p) | PulseBlock::Rf(p) => p.duration_ns,
            PulseBlock::Delay { duration_ns } => *duration_ns,
            PulseBlock::Readout => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PulseBlock::Mw(p) | PulseBlock::Rf(p) => p.validate(),
            PulseBlock::Delay { duration_ns } => check_duration(*duration_ns),
            PulseBlock::Readout => Ok(()),
        }
    }
}

/// Ordered blocks ending in exactly one readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PulseBlock>", into = "Vec<PulseBlock>")]
pub struct PulseSequence {
    blocks: Vec<PulseBlock>,
}

impl PulseSequence {
    pub fn new(blocks: Vec<PulseBlock>) -> Result<Self> {
        let readouts = blocks.iter().filter(|b| matches!(b, PulseBlock::Readout)).count();
        if readouts == 0 {
            return Err(Error::InvalidSequence("sequence has no readout".into()));
        }
        if readouts > 1 || !matches!(blocks.last(), Some(PulseBlock::Readout)) {
            return Err(Error::InvalidSequence("readout must appear once, as the final block".into()));
        }
        for b in &blocks {
            b.validate()?;
        }
        let seq = Self { blocks };
        if !seq.total_duration_ns().is_finite() {
            return Err(Error::InvalidSequence("total duration overflows".into()));
        }
        Ok(seq)
    }

    pub fn blocks(&self) -> &[PulseBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.blocks.iter().map(|b| b.duration_ns()).sum()
    }

    /// Text form accepted by [`parse_sequence`].
    ///
    /// MW pulses are written as angles, so parsing them back needs a context
    /// whose MW Rabi frequency equals the pulses' own. Non-zero phases have
    /// no text form.
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                out.push_str("; ");
            }
            match b {
                PulseBlock::Mw(p) => {
                    no_phase(p)?;
                    let deg = 360.0 * p.rabi_mhz * p.duration_ns * 1e-3;
                    write!(out, "mw {deg} deg @{} mhz", p.carrier_mhz).unwrap();
                }
                PulseBlock::Rf(p) => {
                    no_phase(p)?;
                    write!(out, "rf {} ns @{} mhz", p.duration_ns, p.carrier_mhz).unwrap();
                }
                PulseBlock::Delay { duration_ns } => write!(out, "delay {duration_ns} ns").unwrap(),
                PulseBlock::Readout => out.push_str("read"),
            }
        }
        Ok(out)
    }
}

fn no_phase(p: &Pulse) -> Result<()> {
    if p.phase_rad != 0.0 {
        return Err(Error::InvalidSequence("pulse phases cannot be written in sequence text".into()));
    }
    Ok(())
}

impl TryFrom<Vec<PulseBlock>> for PulseSequence {
    type Error = Error;
    fn try_from(blocks: Vec<PulseBlock>) -> Result<Self> {
        Self::new(blocks)
    }
}

impl From<PulseSequence> for Vec<PulseBlock> {
    fn from(seq: PulseSequence) -> Self {
        seq.blocks
    }
}
