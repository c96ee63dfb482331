//! Reference implementations used by the integration tests. Nothing here
//! calls into the library's eigensolver or Hamiltonian builders.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector3};
use num_complex::Complex64;

pub const MU_B: f64 = 1.3996245;
pub const MU_N: f64 = 0.76226e-3;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Spin matrices (x, y, z) for spin `twice_s / 2` from the ladder formulas,
/// basis ordered m = +s … −s.
pub fn spin_matrices(twice_s: u32) -> [DMatrix<Complex64>; 3] {
    let s = twice_s as f64 / 2.0;
    let n = twice_s as usize + 1;
    let m = |k: usize| s - k as f64;
    let mut plus = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..n {
        // S+ |m⟩ = sqrt(s(s+1) − m(m+1)) |m+1⟩ ; |m+1⟩ sits at k − 1
        let mk = m(k);
        plus[(k - 1, k)] = c((s * (s + 1.0) - mk * (mk + 1.0)).sqrt());
    }
    let minus = plus.adjoint();
    let x = (&plus + &minus).map(|z| z * 0.5);
    let y = (&plus - &minus).map(|z| z * Complex64::new(0.0, -0.5));
    let z = DMatrix::from_fn(n, n, |r, col| if r == col { c(m(r)) } else { c(0.0) });
    [x, y, z]
}

pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

pub fn eye(n: usize) -> DMatrix<Complex64> {
    DMatrix::identity(n, n)
}

fn along(ops: &[DMatrix<Complex64>; 3], v: &Vector3<f64>) -> DMatrix<Complex64> {
    ops[0].map(|z| z * v.x) + ops[1].map(|z| z * v.y) + ops[2].map(|z| z * v.z)
}

/// Cyclic real Jacobi on a symmetric matrix. Returns ascending eigenvalues
/// and the matching columns.
pub fn jacobi_symmetric(mut a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cs * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = idx.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, k| v[(r, idx[k])]);
    (values, vectors)
}

/// Hermitian eigenproblem through the real embedding [[A, −B], [B, A]].
/// Each eigenvalue appears twice there; one member of each pair is kept.
/// Eigenvectors are only meaningful for non-degenerate spectra.
pub fn jacobi_hermitian(h: &DMatrix<Complex64>) -> (Vec<f64>, Vec<DVector<Complex64>>) {
    let n = h.nrows();
    let m = DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, col| {
        let (i, j) = (r % n, col % n);
        let z = h[(i, j)];
        match (r < n, col < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let (vals, vecs) = jacobi_symmetric(m);
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in (0..2 * n).step_by(2) {
        values.push(0.5 * (vals[k] + vals[k + 1]));
        let col = vecs.column(k);
        let v = DVector::from_fn(n, |i, _| Complex64::new(col[i], col[i + n]));
        let norm = v.norm();
        vectors.push(v / c(norm));
    }
    (values, vectors)
}

fn unit(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v).normalize()
}

/// P1 spin Hamiltonian (MHz) in lab coordinates, electron ⊗ ¹⁴N.
pub fn p1_lab_hamiltonian(b_gauss: f64, b_dir: [f64; 3], axis: [f64; 3]) -> DMatrix<Complex64> {
    let (a_par, a_perp, q, g, g_n) = (114.0, 81.0, -3.97, 2.0024, 0.40376);
    let b = unit(b_dir) * b_gauss;
    let n = unit(axis);
    let s0 = spin_matrices(1);
    let i0 = spin_matrices(2);
    let s: [DMatrix<Complex64>; 3] = std::array::from_fn(|k| kron(&s0[k], &eye(3)));
    let i: [DMatrix<Complex64>; 3] = std::array::from_fn(|k| kron(&eye(2), &i0[k]));
    let mut h = along(&s, &b).map(|z| z * (g * MU_B));
    h += along(&i, &b).map(|z| z * (g_n * MU_N));
    for r in 0..3 {
        for col in 0..3 {
            let delta = if r == col { 1.0 } else { 0.0 };
            let a = a_perp * delta + (a_par - a_perp) * n[r] * n[col];
            h += (&s[r] * &i[col]).map(|z| z * a);
        }
    }
    let i_n = along(&i, &n);
    h += (&i_n * &i_n - eye(6).map(|z| z * (2.0 / 3.0))).map(|z| z * q);
    h
}

/// Electron-flip lines of a spin-½ ⊗ nuclei Hamiltonian driven perpendicular
/// to B. Returns (frequency, relative intensity) ascending in frequency.
pub fn electron_flip_lines(h: &DMatrix<Complex64>, b_dir: [f64; 3], nuclear_dim: usize) -> Vec<(f64, f64)> {
    let b = unit(b_dir);
    let helper = if b.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
    let e = helper.cross(&b).normalize();
    let s0 = spin_matrices(1);
    let s: [DMatrix<Complex64>; 3] = std::array::from_fn(|k| kron(&s0[k], &eye(nuclear_dim)));
    let s_par = along(&s, &b);
    let s_drive = along(&s, &e);
    let (vals, vecs) = jacobi_hermitian(h);
    let n = vals.len();
    let pol: Vec<f64> = vecs.iter().map(|v| (v.adjoint() * &s_par * v)[(0, 0)].re).collect();
    let mut raw = Vec::new();
    for a in 0..n {
        for bb in (a + 1)..n {
            let el = (vecs[bb].adjoint() * &s_drive * &vecs[a])[(0, 0)].norm_sqr();
            if (pol[bb] - pol[a]).abs() >= 0.5 {
                raw.push((vals[bb] - vals[a], el));
            }
        }
    }
    let strongest = raw.iter().map(|x| x.1).fold(0.0_f64, f64::max);
    let mut lines: Vec<(f64, f64)> = raw.into_iter().filter(|x| x.1 >= 0.05 * strongest).map(|(f, w)| (f, w / strongest)).collect();
    lines.sort_by(|x, y| x.0.total_cmp(&y.0));
    lines
}

fn nv_rot(theta: f64) -> Matrix2<Complex64> {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    Matrix2::new(c(co), Complex64::new(0.0, -si), Complex64::new(0.0, -si), c(co))
}

fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// DEER echo 2P(|0⟩) − 1 from instantaneous ideal rotations and exact
/// free evolution under (d/2)·σz⊗Sz, written as a 4×4 density matrix
/// calculation. The bath starts maximally mixed; the RF π pulse is ideal.
pub fn ideal_deer_echo(d_mhz: f64, tau_ns: f64) -> f64 {
    let id = Matrix2::<Complex64>::identity();
    let free = |t_ns: f64| {
        // diagonal of (d/2)·σz ⊗ Sz with σz = ±1, Sz = ±½
        let diag = [0.25, -0.25, -0.25, 0.25].map(|e| (Complex64::new(0.0, -2.0 * PI * d_mhz * e * t_ns * 1e-3)).exp());
        Matrix4::from_diagonal(&nalgebra::Vector4::from(diag))
    };
    let half = kron2(&nv_rot(PI / 2.0), &id);
    let pi_nv = kron2(&nv_rot(PI), &id);
    let pi_bath = kron2(&id, &nv_rot(PI));
    let u = half * free(tau_ns) * pi_bath * pi_nv * free(tau_ns) * half;
    let rho0 = Matrix4::from_diagonal(&nalgebra::Vector4::new(c(0.5), c(0.5), c(0.0), c(0.0)));
    let rho = u * rho0 * u.adjoint();
    2.0 * (rho[(0, 0)].re + rho[(1, 1)].re) - 1.0
}

/// Golden-section search for the extremum of a unimodal function.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Composite Simpson of L(x)·R(δ0 − x) over a wide window, written directly
/// from the definitions.
pub fn simpson_flip(d0: f64, om: f64, t_ns: f64, fwhm: f64, gaussian: bool) -> f64 {
    let g = fwhm / 2.0;
    let sigma = fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt());
    let lineshape = |x: f64| {
        if gaussian {
            (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
        } else {
            g / PI / (x * x + g * g)
        }
    };
    let rabi = |d: f64| {
        let w = (om * om + d * d).sqrt();
        om * om / (w * w) * (PI * w * t_ns * 1e-3).sin().powi(2)
    };
    let (lo, hi) = if gaussian { (-12.0 * sigma, 12.0 * sigma) } else { (-4.0e4, 4.0e4) };
    let n = if gaussian { 200_000 } else { 4_000_000 };
    let h = (hi - lo) / n as f64;
    let f = |x: f64| lineshape(x) * rabi(d0 - x);
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        let x = lo + h * k as f64;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}
