//! Dense complex linear algebra shared by the exact oracles.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>` and is meant for
//! desk-scale registers; callers check [`dense_limit`] before building a
//! `2^n x 2^n` matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Qubit cap for dense matrices when `EIGENKIT_DENSE_LIMIT` is unset.
pub const DEFAULT_DENSE_LIMIT: usize = 12;

/// Environment variable overriding the dense qubit cap.
pub const DENSE_LIMIT_ENV: &str = "EIGENKIT_DENSE_LIMIT";

/// Current dense qubit cap, honouring `EIGENKIT_DENSE_LIMIT`.
pub fn dense_limit() -> usize {
    std::env::var(DENSE_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(DEFAULT_DENSE_LIMIT)
}

pub fn check_dense_limit(n_qubits: usize) -> Result<()> {
    let limit = dense_limit();
    if n_qubits > limit {
        return Err(Error::SizeLimit { n_qubits, limit });
    }
    Ok(())
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
///
/// Column `k` of the returned matrix is the eigenvector of eigenvalue `k`.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let dim = m.nrows();
    // Symmetrize so round-off in the input cannot leak into the solver.
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(dim, dim);
    for (col, &src) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `exp(-i t H)` for Hermitian `H`, through its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigh(h);
    propagator_from_eigh(&values, &vectors, t)
}

/// `V diag(exp(-i t E)) V^dagger` from a precomputed decomposition.
pub fn propagator_from_eigh(values: &[f64], vectors: &CMatrix, t: f64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (k, &e) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -e * t);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// `max |U^dagger U - I|` elementwise.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let prod = u.adjoint() * u;
    let dim = u.nrows();
    let mut worst = 0.0_f64;
    for r in 0..dim {
        for c in 0..dim {
            let target = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((prod[(r, c)] - target).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest elementwise deviation from Hermiticity.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let dim = m.nrows();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for c in 0..m.ncols() {
        let x = v[c];
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (r, o) in out.iter_mut().enumerate() {
            *o += m[(r, c)] * x;
        }
    }
    out
}
