//! Spin operator algebra, tensor products, Hermitian eigendecomposition and
//! unitary propagation.
//!
//! Conventions: Hamiltonians are H/h in MHz, durations are ns at the API
//! boundary, and U = exp(−i·2π·H·t) with t in µs internally. Spin bases are
//! ordered m = s … −s; composite spaces are electron ⊗ nucleus ⊗ nucleus.

pub mod dynamics;
pub mod eigen;
pub mod operator;
pub mod spin;

pub use dynamics::{propagate, propagator, propagator_from_eigen, DensityMatrix};
pub use eigen::{eigh, eigvalsh, EigenSystem};
pub use operator::{kron, kron_all, Operator};
pub use spin::{spin_operators, Spin, SpinOperators};

/// Product basis of several spins, used to decode basis indices into
/// projection quantum numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductBasis {
    spins: Vec<Spin>,
}

impl ProductBasis {
    pub fn new(spins: Vec<Spin>) -> Self {
        Self { spins }
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn dim(&self) -> usize {
        self.spins.iter().map(|s| s.multiplicity()).product()
    }

    /// Projection quantum numbers of basis state `index`, one per spin.
    pub fn projections(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        let mut out = vec![0.0; self.spins.len()];
        for (k, spin) in self.spins.iter().enumerate().rev() {
            let mult = spin.multiplicity();
            out[k] = spin.value() - (rest % mult) as f64;
            rest /= mult;
        }
        out
    }

    /// Embeds a single-spin operator acting on factor `k`.
    pub fn embed(&self, k: usize, op: &Operator) -> Operator {
        let ids: Vec<Operator> = self.spins.iter().map(|s| Operator::identity(s.multiplicity())).collect();
        let factors: Vec<&Operator> = ids.iter().enumerate().map(|(i, id)| if i == k { op } else { id }).collect();
        kron_all(&factors)
    }

    /// Cartesian operators of factor `k` in the full space.
    pub fn spin_operators(&self, k: usize) -> SpinOperators {
        let local = SpinOperators::new(self.spins[k]);
        SpinOperators { x: self.embed(k, &local.x), y: self.embed(k, &local.y), z: self.embed(k, &local.z) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_basis_decoding() {
        let basis = ProductBasis::new(vec![Spin::HALF, Spin::ONE]);
        assert_eq!(basis.dim(), 6);
        assert_eq!(basis.projections(0), vec![0.5, 1.0]);
        assert_eq!(basis.projections(2), vec![0.5, -1.0]);
        assert_eq!(basis.projections(4), vec![-0.5, 0.0]);
    }

    #[test]
    fn diagonal_sum_spectrum() {
        let basis = ProductBasis::new(vec![Spin::HALF, Spin::ONE]);
        let h = &basis.spin_operators(0).z + &basis.spin_operators(1).z;
        let e = eigvalsh(&h).unwrap();
        let expected = [-1.5, -0.5, -0.5, 0.5, 0.5, 1.5];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
