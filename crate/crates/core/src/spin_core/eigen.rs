//! Dense Hermitian eigensolver.
//!
//! Householder reduction to a Hermitian tridiagonal matrix, a diagonal phase
//! transform that makes the tridiagonal real, then implicit QL iterations with
//! Wilkinson-type shifts. Eigenvectors are accumulated throughout.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::operator::{Operator, ONE, ZERO};
use crate::error::{Error, Result};

/// Relative Hermiticity tolerance enforced on eigh input.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-10;

const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// stored as the columns of `states`.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub states: Operator,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Eigenvector `k` as a column.
    pub fn state(&self, k: usize) -> Vec<Complex64> {
        let n = self.dim();
        (0..n).map(|i| self.states.get(i, k)).collect()
    }

    /// V·diag(E)·V†.
    pub fn reconstruct(&self) -> Operator {
        let v = self.states.matrix();
        let n = self.dim();
        let scaled = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * self.energies[j]);
        Operator::from_matrix(scaled * v.adjoint()).expect("square")
    }

    /// Matrix elements ⟨i|A|j⟩ in the eigenbasis, V†·A·V.
    pub fn transform(&self, op: &Operator) -> Operator {
        let v = self.states.matrix();
        Operator::from_matrix(v.adjoint() * op.matrix() * v).expect("square")
    }

    /// V·f(E)·V† for a complex-valued spectral function.
    pub fn apply_function(&self, f: impl Fn(f64) -> Complex64) -> Operator {
        let v = self.states.matrix();
        let n = self.dim();
        let fe: Vec<Complex64> = self.energies.iter().map(|&e| f(e)).collect();
        let scaled = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * fe[j]);
        Operator::from_matrix(scaled * v.adjoint()).expect("square")
    }
}

/// Eigendecomposition of a Hermitian operator.
pub fn eigh(h: &Operator) -> Result<EigenSystem> {
    h.ensure_hermitian(HERMITIAN_INPUT_TOL)?;
    let n = h.dim();
    if n == 0 {
        return Ok(EigenSystem { energies: vec![], states: Operator::identity(0) });
    }
    let mut a = h.hermitian_part().into_matrix();
    let mut q: DMatrix<Complex64> = DMatrix::identity(n, n);

    householder_tridiagonalize(&mut a, &mut q);

    // Phase transform D so that D†·T·D has a real non-negative subdiagonal.
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut phase = ONE;
    for k in 0..n {
        diag[k] = a[(k, k)].re;
        if k > 0 {
            let sub = a[(k, k - 1)];
            let r = sub.norm();
            if r > 0.0 {
                phase *= sub / r;
            }
            off[k - 1] = r;
        }
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }

    implicit_ql(&mut diag, &mut off, &mut q)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let energies: Vec<f64> = order.iter().map(|&k| diag[k]).collect();
    let states = DMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok(EigenSystem { energies, states: Operator::from_matrix(states)? })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(h: &Operator) -> Result<Vec<f64>> {
    Ok(eigh(h)?.energies)
}

fn householder_tridiagonalize(a: &mut DMatrix<Complex64>, q: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    let mut v = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let tail_norm = ((k + 1)..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        let below_sub = ((k + 2)..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>();
        if tail_norm == 0.0 || below_sub == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let unit = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -unit * tail_norm;

        v.iter_mut().for_each(|z| *z = ZERO);
        v[k + 1] = x0 - alpha;
        for i in (k + 2)..n {
            v[i] = a[(i, k)];
        }
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vnorm);

        // A ← A·H with H = I − 2 v v†.
        for i in 0..n {
            w[i] = (0..n).map(|j| a[(i, j)] * v[j]).sum();
        }
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= 2.0 * w[i] * v[j].conj();
            }
        }
        // A ← H·A.
        for j in 0..n {
            w[j] = (0..n).map(|i| v[i].conj() * a[(i, j)]).sum();
        }
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= 2.0 * v[i] * w[j];
            }
        }
        // Q ← Q·H.
        for i in 0..n {
            w[i] = (0..n).map(|j| q[(i, j)] * v[j]).sum();
        }
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] -= 2.0 * w[i] * v[j].conj();
            }
        }
        // Exact zeros below the subdiagonal.
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in (k + 2)..n {
            a[(i, k)] = ZERO;
            a[(k, i)] = ZERO;
        }
    }
}

/// Implicit QL on a real symmetric tridiagonal matrix (`d` diagonal,
/// `e[i]` coupling rows i and i+1, `e[n-1]` ignored). Rotations are applied
/// to the columns of `z`.
fn implicit_ql(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<Complex64>) -> Result<()> {
    let n = d.len();
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut shift_acc = 0.0;
    let mut tst1 = 0.0_f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(Error::NoConvergence(MAX_QL_SWEEPS));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                shift_acc += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zk1 = z[(k, i + 1)];
                        let zk = z[(k, i)];
                        z[(k, i + 1)] = zk * s + zk1 * c;
                        z[(k, i)] = zk * c - zk1 * s;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += shift_acc;
        e[l] = 0.0;
    }
    Ok(())
}
