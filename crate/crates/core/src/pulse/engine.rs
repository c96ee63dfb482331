use serde::{Deserialize, Serialize};

use super::system::{rotating_frame_hamiltonian, Frames, PairSystem};
use super::{Pulse, PulseBlock, PulseSequence};
use crate::error::{Error, Result};
use crate::spectrum::{linspace, AxisKind, SignalKind, Spectrum};
use crate::spin_core::{eigh, propagator_from_eigen, DensityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Equal sub-steps per block.
    pub substeps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { substeps: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub rho: DensityMatrix,
    /// Probability of the bright NV state |0⟩, bath traced out.
    pub nv_population: f64,
}

/// NV |0⟩⟨0| ⊗ maximally mixed bath.
pub fn initial_state(system: &PairSystem) -> DensityMatrix {
    DensityMatrix::basis_state(2, 0)
        .unwrap_or_else(|_| unreachable!())
        .kron(&DensityMatrix::maximally_mixed(system.bath_dim()))
}

/// Frames are set by the first pulse on each channel; later pulses on the
/// same channel must share that carrier.
fn frames_for(seq: &PulseSequence, system: &PairSystem) -> Result<Frames> {
    let mut mw: Option<f64> = None;
    let mut rf: Option<f64> = None;
    for b in seq.blocks() {
        let (slot, p, name) = match b {
            PulseBlock::Mw(p) => (&mut mw, p, "MW"),
            PulseBlock::Rf(p) => (&mut rf, p, "RF"),
            _ => continue,
        };
        match slot {
            None => *slot = Some(p.carrier_mhz),
            Some(f) if *f != p.carrier_mhz => {
                return Err(Error::InvalidSequence(format!(
                    "{name} pulses use different carriers ({f} and {} MHz)",
                    p.carrier_mhz
                )));
            }
            _ => {}
        }
    }
    Ok(Frames { mw_mhz: mw.unwrap_or(system.nv_frequency_mhz), rf_mhz: rf.unwrap_or(0.0) })
}

fn bright_population(rho: &DensityMatrix, bath_dim: usize) -> f64 {
    (0..bath_dim).map(|i| rho.operator().get(i, i).re).sum()
}

/// Piecewise-constant propagation of `seq`.
pub fn run_sequence(
    seq: &PulseSequence,
    system: &PairSystem,
    rho0: Option<&DensityMatrix>,
    options: &RunOptions,
) -> Result<RunOutcome> {
    if options.substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1".into()));
    }
    let mut rho = match rho0 {
        Some(r) if r.dim() != system.dim() => {
            return Err(Error::DimensionMismatch { expected: system.dim(), actual: r.dim() });
        }
        Some(r) => r.clone(),
        None => initial_state(system),
    };
    let frames = frames_for(seq, system)?;
    for block in seq.blocks() {
        if matches!(block, PulseBlock::Readout) {
            break;
        }
        let t = block.duration_ns();
        if t == 0.0 {
            continue;
        }
        let eig = eigh(&rotating_frame_hamiltonian(system, block, &frames)?)?;
        let u = propagator_from_eigen(&eig, t / options.substeps as f64)?;
        for _ in 0..options.substeps {
            rho = rho.conjugate_by(&u);
        }
    }
    let nv_population = bright_population(&rho, system.bath_dim());
    Ok(RunOutcome { rho, nv_population })
}

/// Population of |0⟩ against MW pulse length.
pub fn rabi_trace(system: &PairSystem, omega_mhz: f64, f_drive_mhz: f64, t_max_ns: f64, n_points: usize) -> Result<Spectrum> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!("n_points must be at least 2, got {n_points}")));
    }
    if !(t_max_ns > 0.0) || !t_max_ns.is_finite() {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max_ns} ns")));
    }
    let pulse = Pulse::new(f_drive_mhz, omega_mhz, 0.0, 0.0)?;
    let frames = Frames { mw_mhz: f_drive_mhz, rf_mhz: 0.0 };
    let eig = eigh(&rotating_frame_hamiltonian(system, &PulseBlock::Mw(pulse), &frames)?)?;
    let rho0 = initial_state(system);
    let axis = linspace(0.0, t_max_ns, n_points);
    let signal = axis
        .iter()
        .map(|&t| Ok(bright_population(&rho0.conjugate_by(&propagator_from_eigen(&eig, t)?), system.bath_dim())))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(AxisKind::TimeNs, SignalKind::Population, axis, signal)
}

/// DEER timing. The RF pulse sits `rf_offset_ns` after the end of the NV π
/// pulse (negative: before its start). Free evolution `tau_ns` is counted
/// between MW pulse edges with the RF length not subtracted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeerTiming {
    pub tau_ns: f64,
    pub f_rf_mhz: f64,
    pub omega_rf_mhz: f64,
    pub t_rf_ns: f64,
    #[serde(default)]
    pub rf_offset_ns: f64,
}

/// π/2 – τ – π – RF – τ – π/2 – read, all MW pulses at the NV frequency.
pub fn deer_sequence(system: &PairSystem, timing: &DeerTiming) -> Result<PulseSequence> {
    let DeerTiming { tau_ns: tau, t_rf_ns: t_rf, rf_offset_ns: s, .. } = *timing;
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("tau must be non-negative, got {tau} ns")));
    }
    if !(t_rf >= 0.0) || t_rf > 2.0 * tau {
        return Err(Error::InvalidArgument(format!("t_rf = {t_rf} ns must lie in [0, 2·tau = {} ns]", 2.0 * tau)));
    }
    if !(s.abs() <= tau) {
        return Err(Error::InvalidArgument(format!("RF offset {s} ns outside ±tau")));
    }
    let f = system.nv_frequency_mhz;
    let half = PulseBlock::Mw(Pulse::with_angle(f, system.nv_rabi_mhz, std::f64::consts::FRAC_PI_2)?);
    let pi = PulseBlock::Mw(Pulse::with_angle(f, system.nv_rabi_mhz, std::f64::consts::PI)?);
    let rf = PulseBlock::Rf(Pulse::new(timing.f_rf_mhz, timing.omega_rf_mhz, 0.0, t_rf)?);
    let blocks = if s >= 0.0 {
        vec![half, PulseBlock::delay(tau), pi, PulseBlock::delay(s), rf, PulseBlock::delay(tau - s), half, PulseBlock::Readout]
    } else {
        vec![half, PulseBlock::delay(tau + s), rf, PulseBlock::delay(-s), pi, PulseBlock::delay(tau), half, PulseBlock::Readout]
    };
    PulseSequence::new(blocks)
}

/// π/2 – τ₁ – π – τ₂ – π/2 – read.
pub fn hahn_echo_sequence(system: &PairSystem, tau1_ns: f64, tau2_ns: f64) -> Result<PulseSequence> {
    let f = system.nv_frequency_mhz;
    let half = PulseBlock::Mw(Pulse::with_angle(f, system.nv_rabi_mhz, std::f64::consts::FRAC_PI_2)?);
    let pi = PulseBlock::Mw(Pulse::with_angle(f, system.nv_rabi_mhz, std::f64::consts::PI)?);
    PulseSequence::new(vec![half, PulseBlock::delay(tau1_ns), pi, PulseBlock::delay(tau2_ns), half, PulseBlock::Readout])
}

/// Echo amplitude 2·P(|0⟩) − 1 of a full DEER sequence.
pub fn deer_echo(system: &PairSystem, timing: &DeerTiming) -> Result<f64> {
    let seq = deer_sequence(system, timing)?;
    Ok(2.0 * run_sequence(&seq, system, None, &RunOptions::default())?.nv_population - 1.0)
}

/// Echo amplitude with the RF pulse right after the NV π pulse.
pub fn deer_point(system: &PairSystem, f_rf_mhz: f64, t_rf_ns: f64, omega_rf_mhz: f64, tau_ns: f64) -> Result<f64> {
    deer_echo(system, &DeerTiming { tau_ns, f_rf_mhz, omega_rf_mhz, t_rf_ns, rf_offset_ns: 0.0 })
}

/// Echo amplitude against RF pulse length.
pub fn deer_rabi_trace(
    system: &PairSystem,
    f_rf_mhz: f64,
    omega_rf_mhz: f64,
    t_max_ns: f64,
    tau_ns: f64,
    n_points: usize,
) -> Result<Spectrum> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!("n_points must be at least 2, got {n_points}")));
    }
    if !(t_max_ns > 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max_ns} ns")));
    }
    let axis = linspace(0.0, t_max_ns, n_points);
    let signal = axis
        .iter()
        .map(|&t| deer_point(system, f_rf_mhz, t, omega_rf_mhz, tau_ns))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(AxisKind::TimeNs, SignalKind::Echo, axis, signal)
}
