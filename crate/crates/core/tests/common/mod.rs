#![allow(dead_code)]

use balflow_core::linalg::{HermitianMatrix, C64};
use balflow_core::quantization::HermitianInnerProduct;
use balflow_core::{math, Geometry, GeometryKind};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    HermitianMatrix::from_matrix(m)
}

/// `M M* + δ Id` for a random `M`.
pub fn random_positive(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    HermitianMatrix::from_matrix(&m * m.adjoint() + DMatrix::identity(n, n) * C64::new(0.1, 0.0))
}

pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let a = random_hermitian(n, rng);
    let e = a.eigen();
    e.vectors
}

/// `diag(1/((k+1) C(k,j)))`, the round Gram matrix.
pub fn beta_diag(k: usize) -> Vec<f64> {
    (0..=k).map(|j| 1.0 / ((k + 1) as f64 * math::exp(math::ln_binomial(k, j)))).collect()
}

pub fn round_inner_product(k: usize) -> HermitianInnerProduct {
    HermitianInnerProduct::new(k, HermitianMatrix::from_real_diagonal(&beta_diag(k))).unwrap()
}

/// `L e^{A} L*` for the round `H = L L*` and a random Hermitian `A` of size
/// `amplitude`: a point at bounded distance from the round metric.
pub fn perturbed_round(k: usize, rng: &mut ChaCha8Rng, amplitude: f64) -> HermitianInnerProduct {
    let a = random_hermitian(k + 1, rng).scale(amplitude).expm();
    let l = round_inner_product(k).frame().unwrap().l;
    HermitianInnerProduct::new(k, a.congruence(&l)).unwrap()
}

/// A random smooth field of low degree: products of `x = cos θ`,
/// `sin θ` and `cos(mφ + θ_m)` on the sphere, trigonometric on the torus.
pub fn random_smooth_field(geom: &Geometry, rng: &mut ChaCha8Rng, amplitude: f64) -> Vec<f64> {
    let mut terms = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            terms.push((a, b, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..math::TAU)));
        }
    }
    match geom.kind() {
        GeometryKind::Sphere => geom.sample(|x, phi| {
            let s = (1.0 - x * x).sqrt();
            amplitude
                * terms
                    .iter()
                    .map(|&(a, m, c, th)| c * x.powi(a) * s.powi(m) * (m as f64 * phi + th).cos())
                    .sum::<f64>()
                / 9.0
        }),
        GeometryKind::Torus => geom.sample(|x, y| {
            amplitude
                * terms
                    .iter()
                    .map(|&(p, q, c, th)| c * (p as f64 * x + q as f64 * y - y + th).cos())
                    .sum::<f64>()
                / 9.0
        }),
    }
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}
