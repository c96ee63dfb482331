use std::f64::consts::PI;

use num_complex::Complex64;

use super::eigen::{eigh, eigvalsh, EigenSystem};
use super::operator::Operator;
use crate::error::{Error, Result};

pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-12;

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        if !op.is_hermitian(1e-12) {
            return Err(Error::InvalidDensityMatrix("not Hermitian".into()));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} differs from 1")));
        }
        let lowest = eigvalsh(&op)?.first().copied().unwrap_or(0.0);
        if lowest < -POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {lowest:e}")));
        }
        Ok(Self(op))
    }

    /// |ψ⟩⟨ψ| for a state normalized on the fly.
    pub fn pure(state: &[Complex64]) -> Result<Self> {
        let norm = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let psi: Vec<Complex64> = state.iter().map(|z| z / norm).collect();
        Ok(Self(Operator::outer(&psi, &psi)?))
    }

    /// |k⟩⟨k| in a space of dimension `dim`.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidArgument(format!("basis index {k} outside dimension {dim}")));
        }
        let mut diag = vec![0.0; dim];
        diag[k] = 1.0;
        Ok(Self(Operator::from_real_diagonal(&diag)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Operator::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn kron(&self, other: &DensityMatrix) -> Self {
        Self(self.0.kron(&other.0))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// tr(ρ²).
    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// tr(ρ·A).
    pub fn expectation(&self, observable: &Operator) -> Complex64 {
        (&self.0 * observable).trace()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigvalsh(&self.0.hermitian_part())?.first().copied().unwrap_or(0.0))
    }

    /// U ρ U†, no re-validation.
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        Self(&(u * &self.0) * &u.adjoint())
    }
}

fn duration_us(t_ns: f64) -> Result<f64> {
    if !t_ns.is_finite() || t_ns < 0.0 {
        return Err(Error::InvalidArgument(format!("duration must be finite and non-negative, got {t_ns} ns")));
    }
    Ok(t_ns * 1e-3)
}

/// U = exp(−i·2π·H·t) from a precomputed eigensystem of H (MHz), t in ns.
pub fn propagator_from_eigen(eig: &EigenSystem, t_ns: f64) -> Result<Operator> {
    let t_us = duration_us(t_ns)?;
    Ok(eig.apply_function(|e| Complex64::from_polar(1.0, -2.0 * PI * e * t_us)))
}

/// U = exp(−i·2π·H·t) for H in MHz and t in ns.
pub fn propagator(h: &Operator, t_ns: f64) -> Result<Operator> {
    duration_us(t_ns)?;
    propagator_from_eigen(&eigh(h)?, t_ns)
}

/// Unitary evolution ρ → U ρ U†.
pub fn propagate(h: &Operator, t_ns: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if h.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), actual: rho.dim() });
    }
    if t_ns == 0.0 {
        return Ok(rho.clone());
    }
    let u = propagator(h, t_ns)?;
    Ok(rho.conjugate_by(&u))
}
