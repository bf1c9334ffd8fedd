//! Small dense Hermitian linear algebra on top of `nalgebra`.
//!
//! Matrices here are at most `65 × 65` (sections of `O(64)`), so everything is
//! dense and allocation is not a concern.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

pub type C64 = Complex64;

/// Largest condition number accepted after diagonal equilibration.
pub const MAX_CONDITION: f64 = 1e12;

/// A square complex matrix that is Hermitian up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(pub DMatrix<C64>);

impl HermitianMatrix {
    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(n, n, f))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_fn(n, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Symmetrizes `m` as `(m + m*)/2`.
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        let adj = m.adjoint();
        Self((m + adj) * C64::new(0.5, 0.0))
    }

    /// Builds the Hermitian matrix whose lower triangle (diagonal included) is
    /// that of `m`; the strict upper triangle of `m` is ignored.
    pub fn from_lower(mut m: DMatrix<C64>) -> Self {
        let n = m.nrows();
        for a in 0..n {
            for b in a + 1..n {
                m[(a, b)] = m[(b, a)].conj();
            }
            m[(a, a)].im = 0.0;
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `max |H − H*|` over entries.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                d = d.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// Hilbert–Schmidt norm `(tr A²)^{1/2}`.
    pub fn hs_norm(&self) -> f64 {
        math::sqrt(self.0.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Operator norm, the largest eigenvalue modulus.
    pub fn op_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |m: f64, l| m.max(l.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * C64::new(s, 0.0))
    }

    /// `A − tr(A)/n · Id`.
    pub fn trace_free(&self) -> Self {
        let n = self.dim();
        let shift = self.trace() / n as f64;
        let mut m = self.0.clone();
        for i in 0..n {
            m[(i, i)] -= C64::new(shift, 0.0);
        }
        Self(m)
    }

    /// `tr(A B)` (real part; imaginary part vanishes for Hermitian `A`, `B`
    /// only when they commute).
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.0[(i, j)] * other.0[(j, i)];
            }
        }
        acc
    }

    /// `v* A v` for a column vector `v`.
    pub fn quadratic_form(&self, v: &[C64]) -> f64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                row += self.0[(i, j)] * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc.re
    }

    /// Congruence `M A M*`.
    pub fn congruence(&self, m: &DMatrix<C64>) -> Self {
        Self::from_matrix(m * &self.0 * m.adjoint())
    }

    pub fn eigen(&self) -> HermitianEigen {
        let e = self.0.clone().symmetric_eigen();
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
        let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]);
        HermitianEigen { values, vectors }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().values
    }

    /// Applies a real function to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let e = self.eigen();
        let n = self.dim();
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(f(e.values[i]), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::from_matrix(&e.vectors * d * e.vectors.adjoint())
    }

    pub fn expm(&self) -> Self {
        self.map_spectrum(math::exp)
    }

    /// Matrix logarithm of a positive definite matrix.
    pub fn logm(&self) -> Result<Self> {
        let smallest = math::min(&self.eigenvalues());
        if !(smallest > 0.0) {
            return Err(Error::NotPositiveDefinite { smallest });
        }
        Ok(self.map_spectrum(math::ln))
    }

    /// Cholesky factor `L` with `H = L L*`, computed on the diagonally
    /// equilibrated matrix `D H D`, `D = diag(H)^{-1/2}`.
    ///
    /// The condition limit applies to the equilibrated matrix: the monomial
    /// basis of `H⁰(O(k))` has Gram diagonals spanning many orders of
    /// magnitude, which scaling removes exactly.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim();
        let mut scale = Vec::with_capacity(n);
        for i in 0..n {
            let d = self.0[(i, i)].re;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { smallest: self.smallest_eigenvalue() });
            }
            scale.push(1.0 / math::sqrt(d));
        }
        let eq = DMatrix::from_fn(n, n, |i, j| self.0[(i, j)] * C64::new(scale[i] * scale[j], 0.0));
        let chol = match eq.cholesky() {
            Some(c) => c,
            None => return Err(Error::NotPositiveDefinite { smallest: self.smallest_eigenvalue() }),
        };
        let l_eq = chol.l();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let p = l_eq[(i, i)].re;
            lo = lo.min(p);
            hi = hi.max(p);
        }
        let condition = (hi / lo) * (hi / lo);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let l = DMatrix::from_fn(n, n, |i, j| l_eq[(i, j)] / C64::new(scale[i], 0.0));
        let l_inv = lower_triangular_inverse(&l);
        Ok(Cholesky { l, l_inv })
    }

    fn smallest_eigenvalue(&self) -> f64 {
        math::min(&self.eigenvalues())
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &HermitianMatrix {
    type Output = DMatrix<C64>;
    fn mul(self, rhs: Self) -> DMatrix<C64> {
        &self.0 * &rhs.0
    }
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are the corresponding unit eigenvectors.
    pub vectors: DMatrix<C64>,
}

/// `H = L L*` together with `L⁻¹`.
///
/// `C = L⁻¹` is the frame factor: the rows of `C` expressed in the fixed basis
/// form an `H`-orthonormal basis, `C H C* = Id`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    pub l: DMatrix<C64>,
    pub l_inv: DMatrix<C64>,
}

impl Cholesky {
    /// Frame coordinates `C v = L⁻¹ v` of a vector of basis values.
    pub fn to_frame(&self, v: &[C64], out: &mut [C64]) {
        let n = v.len();
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..=i {
                acc += self.l_inv[(i, j)] * v[j];
            }
            out[i] = acc;
        }
    }
}

fn lower_triangular_inverse(l: &DMatrix<C64>) -> DMatrix<C64> {
    let n = l.nrows();
    let mut inv = DMatrix::<C64>::zeros(n, n);
    for col in 0..n {
        inv[(col, col)] = C64::new(1.0, 0.0) / l[(col, col)];
        for row in col + 1..n {
            let mut acc = C64::new(0.0, 0.0);
            for m in col..row {
                acc += l[(row, m)] * inv[(m, col)];
            }
            inv[(row, col)] = -acc / l[(row, row)];
        }
    }
    inv
}
