//! Gauss–Legendre × trapezoid grid on the round sphere of area 1 with a
//! spherical-harmonic transform.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::math;
use crate::quadrature::gauss_legendre;

pub const MIN_N_THETA: usize = 8;
pub const MIN_N_PHI: usize = 16;

/// Laplacian eigenvalue on degree-`ℓ` harmonics, `Δ Y_ℓ = −λ_ℓ Y_ℓ`.
///
/// The round metric of area 1 has Laplace–Beltrami eigenvalues `4π ℓ(ℓ+1)`;
/// dividing by `2π` makes `i∂∂̄φ = ½ Δφ · ω_ref` hold with `ω_ref` the
/// curvature of `O(1)` normalized to mass 1.
#[inline]
pub fn sphere_eigenvalue(l: usize) -> f64 {
    2.0 * (l * (l + 1)) as f64
}

#[derive(Debug, Clone)]
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
    /// `cos θ` at the Gauss nodes, ascending.
    cos_theta: Vec<f64>,
    gl_weights: Vec<f64>,
    /// Quadrature weights for `ω_ref`, node-major (`i * n_phi + j`).
    weights: Vec<f64>,
    /// Largest degree `L` and order `M` in the triangular truncation.
    l_max: usize,
    m_max: usize,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
    /// `legendre[m]` holds `P̄_ℓ^m(x_i)` at `(ℓ − m) * n_theta + i`.
    legendre: Vec<Vec<f64>>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < MIN_N_THETA || n_phi < MIN_N_PHI {
            return Err(Error::InvalidGrid(alloc::format!(
                "sphere grid {n_theta}×{n_phi} below the minimum {MIN_N_THETA}×{MIN_N_PHI}"
            )));
        }
        let (cos_theta, gl_weights) = gauss_legendre(n_theta);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for w in &gl_weights {
            for _ in 0..n_phi {
                weights.push(w / (2.0 * n_phi as f64));
            }
        }
        let l_max = n_theta - 1;
        let m_max = l_max.min((n_phi - 1) / 2);
        let mut cos_table = Vec::with_capacity((m_max + 1) * n_phi);
        let mut sin_table = Vec::with_capacity((m_max + 1) * n_phi);
        for m in 0..=m_max {
            for j in 0..n_phi {
                let a = math::TAU * ((m * j) % n_phi) as f64 / n_phi as f64;
                cos_table.push(math::cos(a));
                sin_table.push(math::sin(a));
            }
        }
        let legendre = (0..=m_max).map(|m| normalized_legendre_table(m, l_max, &cos_theta)).collect();
        Ok(Self {
            n_theta,
            n_phi,
            cos_theta,
            gl_weights,
            weights,
            l_max,
            m_max,
            cos_table,
            sin_table,
            legendre,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree_limit(&self) -> usize {
        self.l_max
    }

    pub fn order_limit(&self) -> usize {
        self.m_max
    }

    /// `(cos θ, φ)` of node `p`.
    pub fn point(&self, p: usize) -> (f64, f64) {
        let i = p / self.n_phi;
        let j = p % self.n_phi;
        (self.cos_theta[i], math::TAU * j as f64 / self.n_phi as f64)
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn gl_weights(&self) -> &[f64] {
        &self.gl_weights
    }

    pub fn spectral_radius(&self) -> f64 {
        sphere_eigenvalue(self.l_max)
    }

    /// Spherical-harmonic coefficients: `coeffs[m][ℓ − m]` of the complex
    /// Fourier component `e^{imφ}` (for `m ≥ 1` the real field carries the
    /// conjugate component implicitly).
    pub fn analyze(&self, f: &[f64]) -> Vec<Vec<C64>> {
        let (nt, np) = (self.n_theta, self.n_phi);
        debug_assert_eq!(f.len(), nt * np);
        let inv = 1.0 / np as f64;
        // Fourier in φ at every latitude.
        let mut fourier = alloc::vec![C64::new(0.0, 0.0); (self.m_max + 1) * nt];
        for i in 0..nt {
            let row = &f[i * np..(i + 1) * np];
            for m in 0..=self.m_max {
                let c = &self.cos_table[m * np..(m + 1) * np];
                let s = &self.sin_table[m * np..(m + 1) * np];
                let (mut re, mut im) = (0.0, 0.0);
                for j in 0..np {
                    re += row[j] * c[j];
                    im -= row[j] * s[j];
                }
                fourier[m * nt + i] = C64::new(re * inv, im * inv);
            }
        }
        (0..=self.m_max)
            .map(|m| {
                let table = &self.legendre[m];
                (m..=self.l_max)
                    .map(|l| {
                        let p = &table[(l - m) * nt..(l - m + 1) * nt];
                        let mut acc = C64::new(0.0, 0.0);
                        for i in 0..nt {
                            acc += fourier[m * nt + i] * (self.gl_weights[i] * p[i]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    pub fn synthesize(&self, coeffs: &[Vec<C64>]) -> Vec<f64> {
        let (nt, np) = (self.n_theta, self.n_phi);
        let mut out = alloc::vec![0.0; nt * np];
        let mut fourier = alloc::vec![C64::new(0.0, 0.0); self.m_max + 1];
        for i in 0..nt {
            for m in 0..=self.m_max {
                let table = &self.legendre[m];
                let mut acc = C64::new(0.0, 0.0);
                for (idx, c) in coeffs[m].iter().enumerate() {
                    acc += c * table[idx * nt + i];
                }
                fourier[m] = acc;
            }
            let row = &mut out[i * np..(i + 1) * np];
            for (j, v) in row.iter_mut().enumerate() {
                let mut acc = fourier[0].re;
                for m in 1..=self.m_max {
                    let z = fourier[m];
                    acc += 2.0 * (z.re * self.cos_table[m * np + j] - z.im * self.sin_table[m * np + j]);
                }
                *v = acc;
            }
        }
        out
    }

    /// Multiplies the degree-`ℓ` component of `f` by `multiplier(ℓ)`; content
    /// beyond the truncation is discarded.
    pub fn apply_multiplier(&self, f: &[f64], multiplier: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut coeffs = self.analyze(f);
        for (m, row) in coeffs.iter_mut().enumerate() {
            for (idx, c) in row.iter_mut().enumerate() {
                *c *= multiplier(m + idx);
            }
        }
        self.synthesize(&coeffs)
    }
}

/// Orthonormal associated Legendre functions, `∫_{-1}^{1} P̄_ℓ^m(x)² dx = 1`.
fn normalized_legendre_table(m: usize, l_max: usize, xs: &[f64]) -> Vec<f64> {
    let nt = xs.len();
    let count = l_max + 1 - m;
    let mut table = alloc::vec![0.0; count * nt];
    for (i, &x) in xs.iter().enumerate() {
        let s = math::sqrt((1.0 - x) * (1.0 + x));
        let mut pmm = math::sqrt(0.5);
        for mm in 1..=m {
            pmm *= math::sqrt((2 * mm + 1) as f64 / (2 * mm) as f64) * s;
        }
        table[i] = pmm;
        if count == 1 {
            continue;
        }
        let mut prev2 = pmm;
        let mut prev = math::sqrt((2 * m + 3) as f64) * x * pmm;
        table[nt + i] = prev;
        for l in m + 2..=l_max {
            let (lf, mf) = (l as f64, m as f64);
            let a = math::sqrt((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf));
            let b = math::sqrt(((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0));
            let cur = a * (x * prev - b * prev2);
            table[(l - m) * nt + i] = cur;
            prev2 = prev;
            prev = cur;
        }
    }
    table
}
