//! Ensemble observables built from stick spectra.
//!
//! A rectangular RF pulse flips a bath line with the generalized Rabi
//! probability, averaged over an inhomogeneous lineshape. A mean-field bath
//! turns the flipped fraction P into an NV echo E = exp(−2Δ·2τ·P).

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{linspace, AxisKind, Channel, SignalKind, Spectrum};
use crate::transitions::StickSpectrum;

/// Minimum dip prominence, as a fraction of the signal span.
pub const DIP_PROMINENCE: f64 = 0.01;
pub const DEFAULT_FWHM_MHZ: f64 = 10.0;
pub const DEFAULT_DELTA_MHZ: f64 = 0.05;
pub const PC_CONTRAST: f64 = 0.038;
pub const PL_CONTRAST: f64 = 0.10;

const REL_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LineshapeKind {
    #[default]
    Lorentzian,
    Gaussian,
}

impl std::str::FromStr for LineshapeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lorentzian" => Ok(Self::Lorentzian),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(Error::InvalidArgument(format!("unknown lineshape '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineshapeConfig {
    pub kind: LineshapeKind,
    pub fwhm_mhz: f64,
}

impl Default for LineshapeConfig {
    fn default() -> Self {
        Self { kind: LineshapeKind::Lorentzian, fwhm_mhz: DEFAULT_FWHM_MHZ }
    }
}

impl LineshapeConfig {
    pub fn new(kind: LineshapeKind, fwhm_mhz: f64) -> Result<Self> {
        let s = Self { kind, fwhm_mhz };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_mhz > 0.0) || !self.fwhm_mhz.is_finite() {
            return Err(Error::InvalidArgument(format!("fwhm must be positive, got {} MHz", self.fwhm_mhz)));
        }
        Ok(())
    }

    /// Unit-area profile at offset `x` MHz.
    pub fn density(&self, x: f64) -> f64 {
        match self.kind {
            LineshapeKind::Lorentzian => {
                let g = self.fwhm_mhz / 2.0;
                g / (PI * (x * x + g * g))
            }
            LineshapeKind::Gaussian => {
                let s = self.sigma();
                (-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
            }
        }
    }

    fn sigma(&self) -> f64 {
        self.fwhm_mhz / (2.0 * (2.0 * LN_2).sqrt())
    }
}

/// Generalized Rabi inversion probability of one spin packet.
pub fn rabi_flip(detuning_mhz: f64, omega_mhz: f64, t_ns: f64) -> f64 {
    let w2 = omega_mhz * omega_mhz + detuning_mhz * detuning_mhz;
    if w2 == 0.0 {
        return 0.0;
    }
    omega_mhz * omega_mhz / w2 * (PI * t_ns * 1e-3 * w2.sqrt()).sin().powi(2)
}

fn check_pulse(omega_mhz: f64, t_ns: f64) -> Result<()> {
    if !(omega_mhz >= 0.0) || !omega_mhz.is_finite() {
        return Err(Error::InvalidArgument(format!("Rabi frequency must be non-negative, got {omega_mhz} MHz")));
    }
    if !(t_ns >= 0.0) || !t_ns.is_finite() {
        return Err(Error::InvalidArgument(format!("pulse length must be non-negative, got {t_ns} ns")));
    }
    Ok(())
}

/// Panels on [lo, hi] that shrink near `features` and never exceed `h_max`.
fn panels(lo: f64, hi: f64, features: &[f64], h_min: f64, h_max: f64) -> Vec<(f64, f64)> {
    let mut keys: Vec<f64> = features.iter().copied().filter(|&f| f > lo && f < hi).collect();
    keys.push(lo);
    keys.push(hi);
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    let dist = |x: f64| features.iter().map(|f| (x - f).abs()).fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for w in keys.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut x = a;
        while x < b {
            let step = (0.25 * dist(x)).clamp(h_min, h_max);
            let next = if b - x < 1.5 * step { b } else { x + step };
            out.push((x, next));
            x = next;
        }
    }
    out
}

fn integrate_panels(f: impl Fn(f64) -> f64, parts: &[(f64, f64)], tol: f64) -> f64 {
    let per = tol / parts.len().max(1) as f64;
    parts.iter().map(|&(a, b)| quadrature::double_exponential::integrate(&f, a, b, per).integral).sum()
}

/// Flip probability of a line at `line_mhz` driven at `f_rf_mhz`, averaged
/// over `shape` (`None` for a single packet).
pub fn flip_probability(
    f_rf_mhz: f64,
    line_mhz: f64,
    omega_mhz: f64,
    t_ns: f64,
    shape: Option<&LineshapeConfig>,
) -> Result<f64> {
    check_pulse(omega_mhz, t_ns)?;
    let d0 = f_rf_mhz - line_mhz;
    let shape = match shape {
        None => return Ok(rabi_flip(d0, omega_mhz, t_ns)),
        Some(s) => s,
    };
    shape.validate()?;
    if omega_mhz == 0.0 || t_ns == 0.0 {
        return Ok(0.0);
    }
    let om = omega_mhz;
    let t_us = t_ns * 1e-3;
    // Oscillation period of the integrand far from resonance.
    let h_max = 1.0 / t_us;
    let p = match shape.kind {
        LineshapeKind::Lorentzian => {
            let g = shape.fwhm_mhz / 2.0;
            // Non-oscillating half of sin² has a closed form.
            let mean = 0.5 * om * (om + g) / (d0 * d0 + (om + g) * (om + g));
            let tol = REL_TOL * mean;
            // Integration by parts bounds each oscillating tail beyond X
            // by 2·A(X)/φ'(X).
            let tail = (8.0 * g * om * om / (PI * PI * t_us * tol)).powf(0.25);
            let x_max = tail.max(2.0 * d0.abs()).max(20.0 * (g + om));
            let parts = panels(-x_max, x_max, &[0.0, d0], 0.25 * g.min(om).min(h_max), h_max.min(x_max));
            let osc = integrate_panels(
                |x| {
                    let w2 = om * om + (d0 - x) * (d0 - x);
                    shape.density(x) * om * om / w2 * (2.0 * PI * t_us * w2.sqrt()).cos()
                },
                &parts,
                tol,
            );
            mean - 0.5 * osc
        }
        LineshapeKind::Gaussian => {
            let s = shape.sigma();
            let x_max = 9.0 * s;
            let scale = om * om / (om * om + d0 * d0 + s * s);
            let parts = panels(-x_max, x_max, &[0.0, d0], 0.25 * s.min(om).min(h_max), h_max.min(x_max));
            integrate_panels(|x| shape.density(x) * rabi_flip(d0 - x, om, t_ns), &parts, REL_TOL * scale)
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// RF sweep grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Sweep {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        let s = Self { min, max, points };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidArgument(format!("sweep needs at least 2 points, got {}", self.points)));
        }
        if !self.min.is_finite() || !self.max.is_finite() || !(self.max > self.min) {
            return Err(Error::InvalidArgument(format!("sweep bounds [{}, {}] must be finite and increasing", self.min, self.max)));
        }
        Ok(())
    }

    pub fn axis(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    /// Mean NV–bath coupling Δ, MHz.
    pub delta_mhz: f64,
    pub tau_ns: f64,
    pub omega_rf_mhz: f64,
    pub t_rf_ns: f64,
    pub lineshape: LineshapeConfig,
}

impl EnsembleModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_mhz >= 0.0) || !self.delta_mhz.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling must be non-negative, got {} MHz", self.delta_mhz)));
        }
        if !(self.tau_ns >= 0.0) || !self.tau_ns.is_finite() {
            return Err(Error::InvalidArgument(format!("tau must be non-negative, got {} ns", self.tau_ns)));
        }
        check_pulse(self.omega_rf_mhz, self.t_rf_ns)?;
        self.lineshape.validate()
    }

    /// Echo for a flipped fraction `p`.
    pub fn echo(&self, p: f64) -> f64 {
        (-2.0 * self.delta_mhz * 2.0 * self.tau_ns * 1e-3 * p).exp()
    }

    /// Weighted flipped fraction at one RF frequency.
    pub fn flipped_fraction(&self, sticks: &StickSpectrum, weights: &[f64], f_rf_mhz: f64) -> Result<f64> {
        let mut total = 0.0;
        for (line, w) in sticks.lines.iter().zip(weights) {
            if *w != 0.0 {
                total += w * flip_probability(f_rf_mhz, line.frequency_mhz, self.omega_rf_mhz, self.t_rf_ns, Some(&self.lineshape))?;
            }
        }
        Ok(total)
    }
}

/// Flipped fraction P(f) over the sweep.
pub fn flipped_spectrum(model: &EnsembleModel, sticks: &StickSpectrum, sweep: &Sweep) -> Result<Spectrum> {
    model.validate()?;
    sweep.validate()?;
    let weights = sticks.normalized_weights();
    let axis = sweep.axis();
    let signal = axis.iter().map(|&f| model.flipped_fraction(sticks, &weights, f)).collect::<Result<Vec<_>>>()?;
    Spectrum::new(AxisKind::FrequencyMhz, SignalKind::Intensity, axis, signal)
}

/// Echo E(f) over the RF sweep.
pub fn deer_spectrum(model: &EnsembleModel, sticks: &StickSpectrum, sweep: &Sweep) -> Result<Spectrum> {
    let p = flipped_spectrum(model, sticks, sweep)?;
    Ok(p.map(SignalKind::Echo, |v| model.echo(v)))
}

/// Echo against RF pulse length at a fixed RF frequency.
pub fn deer_rabi_ensemble(model: &EnsembleModel, sticks: &StickSpectrum, f_rf_mhz: f64, t_max_ns: f64, points: usize) -> Result<Spectrum> {
    model.validate()?;
    if points < 2 || !(t_max_ns > 0.0) || !t_max_ns.is_finite() {
        return Err(Error::InvalidArgument(format!("need t_max > 0 and at least 2 points, got {t_max_ns} ns, {points}")));
    }
    let weights = sticks.normalized_weights();
    let axis = linspace(0.0, t_max_ns, points);
    let signal = axis
        .iter()
        .map(|&t| {
            let m = EnsembleModel { t_rf_ns: t, ..*model };
            Ok(m.echo(m.flipped_fraction(sticks, &weights, f_rf_mhz)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(AxisKind::TimeNs, SignalKind::Echo, axis, signal)
}

/// Σ w_k·L(f − f_k) with unit-sum weights.
pub fn broaden(sticks: &StickSpectrum, shape: &LineshapeConfig, sweep: &Sweep) -> Result<Spectrum> {
    shape.validate()?;
    sweep.validate()?;
    let weights = sticks.normalized_weights();
    let axis = sweep.axis();
    let signal = axis
        .iter()
        .map(|&f| sticks.lines.iter().zip(&weights).map(|(l, w)| w * shape.density(f - l.frequency_mhz)).sum())
        .collect();
    Spectrum::new(AxisKind::FrequencyMhz, SignalKind::Intensity, axis, signal)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub channel: Channel,
    pub contrast: f64,
    pub baseline: f64,
}

impl ReadoutModel {
    /// Default contrast per channel with unit baseline.
    pub fn for_channel(channel: Channel) -> Self {
        let contrast = match channel {
            Channel::Pc => PC_CONTRAST,
            Channel::Pl => PL_CONTRAST,
        };
        Self { channel, contrast, baseline: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(Error::InvalidArgument(format!("contrast must lie in [0, 1], got {}", self.contrast)));
        }
        if !self.baseline.is_finite() {
            return Err(Error::InvalidArgument("baseline must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReadoutInput {
    /// Echo amplitude in [−1, 1].
    Echo,
    /// Bright-state population in [0, 1].
    Population,
}

const RANGE_SLACK: f64 = 1e-9;

/// signal = baseline·(1 − C·(1 − x)/2) for echo x; populations use x = 2p − 1.
pub fn readout_map(value: f64, input: ReadoutInput, model: &ReadoutModel) -> Result<f64> {
    model.validate()?;
    let x = match input {
        ReadoutInput::Echo => {
            if !(value >= -1.0 - RANGE_SLACK && value <= 1.0 + RANGE_SLACK) {
                return Err(Error::InvalidArgument(format!("echo {value} outside [-1, 1]")));
            }
            value
        }
        ReadoutInput::Population => {
            if !(value >= -RANGE_SLACK && value <= 1.0 + RANGE_SLACK) {
                return Err(Error::InvalidArgument(format!("population {value} outside [0, 1]")));
            }
            2.0 * value - 1.0
        }
    };
    Ok(model.baseline * (1.0 - model.contrast * (1.0 - x) / 2.0))
}

/// Maps an echo or population series through the readout.
pub fn readout_spectrum(spectrum: &Spectrum, model: &ReadoutModel) -> Result<Spectrum> {
    let input = match spectrum.signal_kind {
        SignalKind::Echo => ReadoutInput::Echo,
        SignalKind::Population => ReadoutInput::Population,
        other => return Err(Error::InvalidArgument(format!("cannot read out a {} series", other.column()))),
    };
    let signal = spectrum.signal.iter().map(|&v| readout_map(v, input, model)).collect::<Result<Vec<_>>>()?;
    Spectrum::new(spectrum.axis_kind, SignalKind::Readout(model.channel), spectrum.axis.clone(), signal)
}

/// cw spectrum: broadened sticks scaled to unit peak, signal drops by C at
/// the strongest line.
pub fn odmr_spectrum(sticks: &StickSpectrum, shape: &LineshapeConfig, sweep: &Sweep, model: &ReadoutModel) -> Result<Spectrum> {
    model.validate()?;
    let b = broaden(sticks, shape, sweep)?;
    let peak = b.signal.iter().copied().fold(0.0_f64, f64::max);
    let norm = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    Ok(b.map(SignalKind::Readout(model.channel), |v| model.baseline * (1.0 - model.contrast * v * norm)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_pulses() {
        let om = 1.0 / 0.12;
        let t = 500.0 / om;
        assert!((flip_probability(200.0, 200.0, om, t, None).unwrap() - 1.0).abs() < 1e-12);
        assert!(flip_probability(200.0 + 3f64.sqrt() * om, 200.0, om, t, None).unwrap().abs() < 1e-9);
        let shape = LineshapeConfig::default();
        assert_eq!(flip_probability(200.0, 200.0, 0.0, 60.0, Some(&shape)).unwrap(), 0.0);
        assert!(flip_probability(200.0, 200.0, -1.0, 60.0, None).is_err());
    }

    #[test]
    fn broadened_flip_is_symmetric_and_bounded() {
        let om = 1.0 / 0.12;
        for kind in [LineshapeKind::Lorentzian, LineshapeKind::Gaussian] {
            let shape = LineshapeConfig::new(kind, 10.0).unwrap();
            for d in [0.0, 3.0, 12.0, 80.0] {
                let a = flip_probability(160.0 + d, 160.0, om, 60.0, Some(&shape)).unwrap();
                let b = flip_probability(160.0 - d, 160.0, om, 60.0, Some(&shape)).unwrap();
                assert!((0.0..=1.0).contains(&a));
                assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{kind:?} {d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn narrow_line_approaches_packet() {
        let om = 1.0 / 0.12;
        let narrow = LineshapeConfig::new(LineshapeKind::Gaussian, 1e-3).unwrap();
        let p = flip_probability(160.0, 160.0, om, 60.0, Some(&narrow)).unwrap();
        assert!((p - 1.0).abs() < 1e-6);
    }

    #[test]
    fn readout_examples() {
        let pc = ReadoutModel { channel: Channel::Pc, contrast: 0.038, baseline: 2.0 };
        assert_eq!(readout_map(1.0, ReadoutInput::Echo, &pc).unwrap(), 2.0);
        assert!((readout_map(-1.0, ReadoutInput::Echo, &pc).unwrap() - 2.0 * 0.962).abs() < 1e-15);
        assert!((readout_map(0.0, ReadoutInput::Population, &pc).unwrap() - 2.0 * 0.962).abs() < 1e-15);
        assert!(readout_map(1.5, ReadoutInput::Echo, &pc).is_err());
        assert!(readout_map(-0.5, ReadoutInput::Population, &pc).is_err());
        let bad = ReadoutModel { contrast: 1.5, ..pc };
        assert!(readout_map(0.0, ReadoutInput::Echo, &bad).is_err());
    }

    #[test]
    fn lineshape_area_and_width() {
        for kind in [LineshapeKind::Lorentzian, LineshapeKind::Gaussian] {
            let s = LineshapeConfig::new(kind, 10.0).unwrap();
            let half = s.density(5.0) / s.density(0.0);
            assert!((half - 0.5).abs() < 1e-12, "{kind:?}");
        }
        assert!(LineshapeConfig::new(LineshapeKind::Lorentzian, 0.0).is_err());
    }
}
