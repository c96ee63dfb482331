use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Pl,
    Pc,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Pl => "pl",
            Channel::Pc => "pc",
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pl" => Ok(Channel::Pl),
            "pc" => Ok(Channel::Pc),
            other => Err(Error::InvalidArgument(format!("unknown channel '{other}' (expected pl or pc)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    FrequencyMhz,
    TimeNs,
}

impl AxisKind {
    pub fn column(self) -> &'static str {
        match self {
            AxisKind::FrequencyMhz => "frequency_mhz",
            AxisKind::TimeNs => "time_ns",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "channel")]
pub enum SignalKind {
    /// Broadened line intensity.
    Intensity,
    /// NV bright-state population.
    Population,
    /// Echo amplitude in [−1, 1].
    Echo,
    /// Readout signal of a detection channel.
    Readout(Channel),
}

impl SignalKind {
    pub fn column(self) -> String {
        match self {
            SignalKind::Intensity => "intensity".into(),
            SignalKind::Population => "population".into(),
            SignalKind::Echo => "echo".into(),
            SignalKind::Readout(c) => format!("signal_{}", c.name()),
        }
    }
}

/// Sampled series with a strictly increasing axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub axis_kind: AxisKind,
    pub signal_kind: SignalKind,
    pub axis: Vec<f64>,
    pub signal: Vec<f64>,
}

impl Spectrum {
    pub fn new(axis_kind: AxisKind, signal_kind: SignalKind, axis: Vec<f64>, signal: Vec<f64>) -> Result<Self> {
        if axis.len() != signal.len() {
            return Err(Error::InvalidArgument(format!("axis has {} samples but signal has {}", axis.len(), signal.len())));
        }
        if axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("spectrum axis must be strictly increasing".into()));
        }
        Ok(Self { axis_kind, signal_kind, axis, signal })
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Index of the smallest sample.
    pub fn argmin(&self) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| self.signal[a].total_cmp(&self.signal[b]))
    }

    /// Same axis, values mapped.
    pub fn map(&self, kind: SignalKind, f: impl Fn(f64) -> f64) -> Self {
        Self { axis_kind: self.axis_kind, signal_kind: kind, axis: self.axis.clone(), signal: self.signal.iter().map(|&v| f(v)).collect() }
    }

    /// Local minima with prominence ≥ `min_relative_prominence` times the
    /// total signal span. Returns sample indices in axis order.
    pub fn dips(&self, min_relative_prominence: f64) -> Vec<usize> {
        let s = &self.signal;
        let n = s.len();
        if n < 3 {
            return vec![];
        }
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let span = hi - lo;
        if !(span > 0.0) {
            return vec![];
        }
        let mut out = Vec::new();
        let mut i = 1;
        while i < n - 1 {
            if s[i] < s[i - 1] {
                // Plateau minima are reported at their first sample.
                let mut j = i;
                while j + 1 < n && s[j + 1] == s[i] {
                    j += 1;
                }
                if j + 1 < n && s[j + 1] > s[i] {
                    let left = s[..i].iter().rev().take_while(|&&v| v >= s[i]).fold(s[i], |a, &v| a.max(v));
                    let right = s[j + 1..].iter().take_while(|&&v| v >= s[i]).fold(s[i], |a, &v| a.max(v));
                    let prominence = left.min(right) - s[i];
                    if prominence >= min_relative_prominence * span {
                        out.push(i);
                    }
                }
                i = j + 1;
            } else {
                i += 1;
            }
        }
        out
    }

    /// Local maxima, same rule as [`Spectrum::dips`].
    pub fn peaks(&self, min_relative_prominence: f64) -> Vec<usize> {
        let negated = Self { signal: self.signal.iter().map(|v| -v).collect(), ..self.clone() };
        negated.dips(min_relative_prominence)
    }
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|k| if k == n - 1 { stop } else { start + step * k as f64 }).collect()
        }
    }
}
