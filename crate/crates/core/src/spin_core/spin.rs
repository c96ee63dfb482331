use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operator::Operator;
use crate::error::{Error, Result};

/// Half-integer spin quantum number, stored as 2s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Spin(u32);

impl Spin {
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);

    pub fn new(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !s.is_finite() || s < 0.0 || (twice - twice.round()).abs() > 1e-12 || twice > 64.0 {
            return Err(Error::InvalidSpin(s));
        }
        Ok(Spin(twice.round() as u32))
    }

    pub fn from_twice(twice: u32) -> Self {
        Spin(twice)
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// 2s + 1.
    pub fn multiplicity(self) -> usize {
        self.0 as usize + 1
    }

    /// Projection quantum numbers in basis order, m = s … −s.
    pub fn projections(self) -> Vec<f64> {
        let s = self.value();
        (0..self.multiplicity()).map(|i| s - i as f64).collect()
    }
}

impl TryFrom<f64> for Spin {
    type Error = Error;
    fn try_from(s: f64) -> Result<Self> {
        Spin::new(s)
    }
}

impl From<Spin> for f64 {
    fn from(s: Spin) -> f64 {
        s.value()
    }
}

/// Cartesian spin operators in the |s, m⟩ basis.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
}

impl SpinOperators {
    pub fn new(spin: Spin) -> Self {
        let s = spin.value();
        let m = spin.projections();
        let n = spin.multiplicity();
        let mut raise = Operator::zeros(n);
        // S+ |m⟩ = sqrt(s(s+1) − m(m+1)) |m+1⟩; index i−1 carries m_i + 1.
        for i in 1..n {
            let c = (s * (s + 1.0) - m[i] * (m[i] + 1.0)).max(0.0).sqrt();
            raise.set(i - 1, i, Complex64::new(c, 0.0));
        }
        let lower = raise.adjoint();
        let x = (&raise + &lower).scale(0.5);
        let y = (&raise - &lower).scale_complex(Complex64::new(0.0, -0.5));
        let z = Operator::from_real_diagonal(&m);
        Self { x, y, z }
    }

    pub fn components(&self) -> [&Operator; 3] {
        [&self.x, &self.y, &self.z]
    }

    /// n·S for a 3-vector n.
    pub fn along(&self, n: [f64; 3]) -> Operator {
        &(&self.x.scale(n[0]) + &self.y.scale(n[1])) + &self.z.scale(n[2])
    }

    /// Sx² + Sy² + Sz².
    pub fn casimir(&self) -> Operator {
        &(&(&self.x * &self.x) + &(&self.y * &self.y)) + &(&self.z * &self.z)
    }
}

/// Sx, Sy, Sz for spin quantum number `s`.
pub fn spin_operators(s: f64) -> Result<SpinOperators> {
    Ok(SpinOperators::new(Spin::new(s)?))
}
