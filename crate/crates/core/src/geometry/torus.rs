//! Uniform periodic grid on `ℝ²/2πℤ²` with a Fourier-spectral Laplacian.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fft::Radix2;
use crate::linalg::C64;
use crate::math;

pub const MIN_N: usize = 16;

#[derive(Debug, Clone)]
pub struct TorusGrid {
    n_x: usize,
    n_y: usize,
    weights: Vec<f64>,
    fft_x: Radix2,
    fft_y: Radix2,
}

impl TorusGrid {
    pub fn new(n_x: usize, n_y: usize) -> Result<Self> {
        for n in [n_x, n_y] {
            if n < MIN_N || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(alloc::format!(
                    "torus grid {n_x}×{n_y}: sizes must be powers of two and at least {MIN_N}"
                )));
            }
        }
        let w = 1.0 / (n_x * n_y) as f64;
        Ok(Self {
            n_x,
            n_y,
            weights: alloc::vec![w; n_x * n_y],
            fft_x: Radix2::new(n_x),
            fft_y: Radix2::new(n_y),
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(x, y)` of node `p`; nodes are row-major in `x`.
    pub fn point(&self, p: usize) -> (f64, f64) {
        let i = p / self.n_y;
        let j = p % self.n_y;
        (
            math::TAU * i as f64 / self.n_x as f64,
            math::TAU * j as f64 / self.n_y as f64,
        )
    }

    pub fn spectral_radius(&self) -> f64 {
        let (a, b) = ((self.n_x / 2) as f64, (self.n_y / 2) as f64);
        a * a + b * b
    }

    /// Signed integer wavenumber of DFT bin `i` of an `n`-point transform.
    fn wavenumber(i: usize, n: usize) -> f64 {
        if i <= n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    }

    fn half_width(&self) -> usize {
        self.n_y / 2 + 1
    }

    /// Unnormalized 2-D DFT of a real field, keeping the `n_y/2 + 1`
    /// non-negative `y`-frequencies (the rest follow by conjugate symmetry).
    ///
    /// Rows are transformed in pairs packed as real and imaginary parts.
    pub fn forward(&self, f: &[f64]) -> Vec<C64> {
        let (nx, ny, h) = (self.n_x, self.n_y, self.half_width());
        debug_assert_eq!(f.len(), nx * ny);
        let mut out = alloc::vec![C64::new(0.0, 0.0); nx * h];
        let mut z = alloc::vec![C64::new(0.0, 0.0); ny];
        for r in (0..nx).step_by(2) {
            let (a, b) = (&f[r * ny..(r + 1) * ny], &f[(r + 1) * ny..(r + 2) * ny]);
            for j in 0..ny {
                z[j] = C64::new(a[j], b[j]);
            }
            self.fft_y.forward(&mut z);
            for q in 0..h {
                let zq = z[q];
                let zm = z[(ny - q) % ny].conj();
                out[r * h + q] = (zq + zm) * 0.5;
                out[(r + 1) * h + q] = (zq - zm) * C64::new(0.0, -0.5);
            }
        }
        let mut col = alloc::vec![C64::new(0.0, 0.0); nx];
        for q in 0..h {
            for i in 0..nx {
                col[i] = out[i * h + q];
            }
            self.fft_x.forward(&mut col);
            for i in 0..nx {
                out[i * h + q] = col[i];
            }
        }
        out
    }

    /// Inverse of [`Self::forward`].
    pub fn inverse(&self, mut data: Vec<C64>) -> Vec<f64> {
        let (nx, ny, h) = (self.n_x, self.n_y, self.half_width());
        let mut col = alloc::vec![C64::new(0.0, 0.0); nx];
        for q in 0..h {
            for i in 0..nx {
                col[i] = data[i * h + q];
            }
            self.fft_x.inverse(&mut col);
            for i in 0..nx {
                data[i * h + q] = col[i];
            }
        }
        let mut out = alloc::vec![0.0; nx * ny];
        let mut z = alloc::vec![C64::new(0.0, 0.0); ny];
        let i_unit = C64::new(0.0, 1.0);
        for r in (0..nx).step_by(2) {
            let (a, b) = (&data[r * h..(r + 1) * h], &data[(r + 1) * h..(r + 2) * h]);
            for q in 0..ny {
                let (aq, bq) = if q < h { (a[q], b[q]) } else { (a[ny - q].conj(), b[ny - q].conj()) };
                z[q] = aq + i_unit * bq;
            }
            self.fft_y.inverse(&mut z);
            for j in 0..ny {
                out[r * ny + j] = z[j].re;
                out[(r + 1) * ny + j] = z[j].im;
            }
        }
        out
    }

    /// Multiplies the `e^{i(px + qy)}` component by `multiplier(p, q)`.
    /// The multiplier must be even so that the result stays real.
    pub fn apply_multiplier(&self, f: &[f64], multiplier: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let (nx, h) = (self.n_x, self.half_width());
        let mut data = self.forward(f);
        for i in 0..nx {
            let p = Self::wavenumber(i, nx);
            for q in 0..h {
                data[i * h + q] *= multiplier(p, q as f64);
            }
        }
        self.inverse(data)
    }

    /// `−∫ f Δf` from Parseval.
    pub fn dirichlet_energy(&self, f: &[f64]) -> f64 {
        let (nx, ny, h) = (self.n_x, self.n_y, self.half_width());
        let data = self.forward(f);
        let mut acc = 0.0;
        for i in 0..nx {
            let p = Self::wavenumber(i, nx);
            for q in 0..h {
                let mult = if q == 0 || q == ny / 2 { 1.0 } else { 2.0 };
                let qf = q as f64;
                acc += mult * (p * p + qf * qf) * data[i * h + q].norm_sqr();
            }
        }
        let n = (nx * ny) as f64;
        acc / (n * n)
    }
}
