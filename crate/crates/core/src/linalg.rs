//! Dense complex/real linear-algebra helpers shared by the model and optimizers.
//!
//! The Hermitian Cholesky factorization is kept in-crate so that every
//! application of `R⁻¹` is a pair of triangular solves against a cached factor.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;
/// Column vector of complex samples.
pub type CVector = DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;
/// Real column vector.
pub type RVector = DVector<f64>;
/// Dense real matrix.
pub type RMatrix = DMatrix<f64>;

/// Lower-triangular factor `L` with `A = L Lᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    /// Factors a Hermitian matrix, reading only its lower triangle.
    ///
    /// Returns `None` when a pivot is not strictly positive and finite.
    pub fn new(a: &CMatrix) -> Option<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return None;
        }
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let ljj = libm::sqrt(d);
            l[(j, j)] = C64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(Self { l })
    }

    /// The lower-triangular factor.
    pub fn factor(&self) -> &CMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &CVector) -> CVector {
        let n = self.dim();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)].re;
        }
        y
    }

    /// Solves `Lᴴ x = y`.
    pub fn backward(&self, y: &CVector) -> CVector {
        let n = self.dim();
        let mut x = y.clone();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        x
    }

    /// Solves `A x = b` with two triangular solves.
    pub fn solve(&self, b: &CVector) -> CVector {
        self.backward(&self.forward(b))
    }

    /// `bᴴ A⁻¹ b`, computed as `‖L⁻¹ b‖²`.
    pub fn inverse_quadratic_form(&self, b: &CVector) -> f64 {
        self.forward(b).norm_squared()
    }

    /// Explicit inverse, column by column.
    pub fn inverse(&self) -> CMatrix {
        let n = self.dim();
        let mut inv = CMatrix::zeros(n, n);
        let mut e = CVector::zeros(n);
        for j in 0..n {
            e.fill(C64::zero());
            e[j] = C64::new(1.0, 0.0);
            inv.set_column(j, &self.solve(&e));
        }
        hermitize(&mut inv);
        inv
    }
}

/// Replaces `a` by `(a + aᴴ)/2`.
pub fn hermitize(a: &mut CMatrix) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let m = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = m;
            a[(j, i)] = m.conj();
        }
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut h = a.clone();
    hermitize(&mut h);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Spectral norm of a Hermitian matrix (largest absolute eigenvalue).
pub fn hermitian_spectral_norm(a: &CMatrix) -> f64 {
    hermitian_eigenvalues(a)
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Principal square root of a Hermitian positive semidefinite matrix.
///
/// Fails when the matrix has an eigenvalue below `-1e-12·‖A‖`.
pub fn hermitian_sqrt(a: &CMatrix) -> Result<CMatrix> {
    hermitian_power(a, 0.5)
}

/// `A^{-1/2}` for Hermitian positive definite `A`.
pub fn hermitian_inv_sqrt(a: &CMatrix) -> Result<CMatrix> {
    hermitian_power(a, -0.5)
}

fn hermitian_power(a: &CMatrix, p: f64) -> Result<CMatrix> {
    let mut h = a.clone();
    hermitize(&mut h);
    let eig = h.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut d = CVector::zeros(eig.eigenvalues.len());
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let lam = if lam < 0.0 && lam > -1e-12 * scale { 0.0 } else { lam };
        if lam < 0.0 || (p < 0.0 && lam <= 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        d[i] = C64::new(libm::pow(lam, p), 0.0);
    }
    let q = &eig.eigenvectors;
    let mut out = q * CMatrix::from_diagonal(&d) * q.adjoint();
    hermitize(&mut out);
    Ok(out)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn symmetric_min_eigenvalue(a: &RMatrix) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v))
}

/// Real Cholesky solve of `A x = b` for symmetric positive definite `A`.
pub fn real_cholesky_solve(a: &RMatrix, b: &RVector) -> Option<RVector> {
    a.clone().cholesky().map(|c| c.solve(b))
}
