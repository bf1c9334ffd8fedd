mod common;

use balflow_core::geometry::{sphere_eigenvalue, FieldRole};
use balflow_core::linalg::C64;
use balflow_core::{math, Error, Geometry};
use common::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn sphere_area_is_one() {
    let g = Geometry::sphere(32, 64).unwrap();
    let one = vec![1.0; g.len()];
    assert!((g.integrate(&one) - 1.0).abs() < 1e-12);
    assert!(g.weights().iter().all(|&w| w > 0.0));
}

#[test]
fn torus_area_is_one() {
    let g = Geometry::torus(32, 16).unwrap();
    assert!((g.integrate(&vec![1.0; g.len()]) - 1.0).abs() < 1e-12);
    assert!(g.weights().iter().all(|&w| w > 0.0));
}

#[test]
fn laplacian_annihilates_constants() {
    for g in [Geometry::sphere(32, 64).unwrap(), Geometry::torus(32, 32).unwrap()] {
        let lap = g.laplacian(&vec![1.0; g.len()]);
        assert!(math::max_abs(&lap) < 1e-10);
    }
}

#[test]
fn grid_minimums_are_enforced() {
    assert!(matches!(Geometry::sphere(7, 64), Err(Error::InvalidGrid(_))));
    assert!(matches!(Geometry::sphere(8, 15), Err(Error::InvalidGrid(_))));
    assert!(Geometry::sphere(8, 16).is_ok());
    assert!(matches!(Geometry::torus(48, 64), Err(Error::InvalidGrid(_))));
    assert!(matches!(Geometry::torus(64, 8), Err(Error::InvalidGrid(_))));
}

#[test]
fn mean_free_fields_integrate_to_zero() {
    let g = Geometry::sphere(32, 64).unwrap();
    // Zero-mean combinations of low harmonics and their products.
    let y = g.sample(|x, phi| {
        let s = (1.0 - x * x).sqrt();
        x + 0.5 * s * phi.cos() * x - 0.3 * s.powi(3) * (3.0 * phi).sin() + (3.0 * x * x - 1.0)
    });
    assert!(g.integrate(&y).abs() < 1e-10);
}

#[test]
fn band_limited_harmonics_integrate_exactly() {
    let g = Geometry::sphere(16, 32).unwrap();
    // x^a s^m cos(mφ): zero unless m = 0, and then the Legendre moment.
    for a in 0..=15u32 {
        for m in 0..=8u32 {
            let f = g.sample(|x, phi| x.powi(a as i32) * (1.0 - x * x).sqrt().powi(m as i32) * (m as f64 * phi).cos());
            let expect = if m == 0 && a % 2 == 0 { 1.0 / (a as f64 + 1.0) } else { 0.0 };
            if a + m <= 31 && m < 16 {
                assert!((g.integrate(&f) - expect).abs() < 1e-10, "a={a} m={m}");
            }
        }
    }
}

#[test]
fn sphere_laplacian_eigenvalues() {
    let g = Geometry::sphere(24, 48).unwrap();
    // Degree-2 harmonics: 3x² − 1 and x sinθ cos φ.
    for f in [g.sample(|x, _| 3.0 * x * x - 1.0), g.sample(|x, phi| x * (1.0 - x * x).sqrt() * phi.cos())] {
        let lap = g.laplacian(&f);
        for (a, b) in f.iter().zip(&lap) {
            assert!((b + sphere_eigenvalue(2) * a).abs() < 1e-11 * (1.0 + b.abs()), "{a} {b}");
        }
    }
}

/// Pulling the round form back by `z ↦ az` changes the potential by
/// `ln((1+x)/2 + a²(1−x)/2)` and the density to `a²/((1+x)/2 + a²(1−x)/2)²`.
#[test]
fn ma_density_of_dilation_matches_closed_form() {
    let g = Geometry::sphere(64, 128).unwrap();
    let a2: f64 = 1.3;
    let phi = g.sample(|x, _| ((1.0 + x) / 2.0 + a2 * (1.0 - x) / 2.0).ln());
    let u = g.ma_density(&phi);
    let expect = g.sample(|x, _| a2 / ((1.0 + x) / 2.0 + a2 * (1.0 - x) / 2.0).powi(2));
    assert!(sup_diff(u.values(), &expect) < 1e-10, "{}", sup_diff(u.values(), &expect));
}

#[test]
fn torus_laplacian_of_cosine() {
    let g = Geometry::torus(64, 64).unwrap();
    let f = g.sample(|x, _| x.cos());
    let lap = g.laplacian(&f);
    assert!(sup_diff(&lap, &f.iter().map(|v| -v).collect::<Vec<_>>()) < 1e-12);
}

#[test]
fn ma_density_examples() {
    let g = Geometry::torus(32, 32).unwrap();
    let u = g.ma_density(&vec![0.0; g.len()]);
    assert!(u.values().iter().all(|&v| v == 1.0));
    assert_eq!(u.role(), FieldRole::MaDensity);
    let eps = 0.2;
    let u = g.ma_density(&g.sample(|x, _| eps * x.cos()));
    let expect = g.sample(|x, _| 1.0 - eps / 2.0 * x.cos());
    assert!(sup_diff(u.values(), &expect) < 1e-12);
}

#[test]
fn section_basis_examples() {
    let g = Geometry::sphere(16, 32).unwrap();
    assert_eq!(g.section_basis(1).unwrap().dim(), 2);

    let b = g.section_basis(8).unwrap();
    let gram = b.gram_at(1.0, 0.3);
    for i in 0..9 {
        for j in 0..9 {
            let expect = if i == 0 && j == 0 { 1.0 } else { 0.0 };
            assert!((gram[i * 9 + j] - C64::new(expect, 0.0)).norm() < 1e-15, "({i},{j})");
        }
    }
}

#[test]
fn section_norms_match_beta_integrals() {
    let g = Geometry::sphere(16, 32).unwrap();
    let k = 8;
    let b = g.section_basis(k).unwrap();
    for j in 0..=k {
        let grid: f64 = (0..g.len()).map(|p| g.weights()[p] * b.gram_ref(p, j, j).re).sum();
        // ω_ref = dx dφ/(4π) in x = cos θ, and |e_j|² = (1−x)^j (1+x)^{k−j}/2^k.
        let f = move |x: f64| (1.0 - x).powi(j as i32) * (1.0 + x).powi((k - j) as i32) / 2f64.powi(k as i32) / 2.0;
        let oracle = adaptive_simpson(&f, -1.0, 1.0, 1e-15);
        let closed = beta_diag(k)[j];
        assert!((grid - oracle).abs() < 1e-14, "j={j} grid={grid} oracle={oracle}");
        assert!((closed - oracle).abs() < 1e-14);
    }
}

#[test]
fn section_basis_rejects_torus_and_large_k() {
    let t = Geometry::torus(16, 16).unwrap();
    assert!(matches!(t.section_basis(3), Err(Error::Unsupported(_))));
    let s = Geometry::sphere(8, 16).unwrap();
    assert!(s.section_basis(65).is_err());
    // Large k near the poles stays finite.
    let s = Geometry::sphere(96, 192).unwrap();
    let b = s.section_basis(64).unwrap();
    for p in [0, s.len() - 1, s.len() / 2] {
        for j in [0, 32, 64] {
            assert!(b.gram_ref(p, j, j).re.is_finite());
        }
    }
}

#[test]
fn volume_density_validation() {
    let g = Geometry::sphere(8, 16).unwrap();
    assert!(g.volume_density(vec![1.0; g.len()]).is_ok());
    assert!(matches!(g.volume_density(vec![2.0; g.len()]), Err(Error::InvalidDensity(_))));
    let mut v = vec![1.0; g.len()];
    v[3] = -1.0;
    assert!(matches!(g.normalized_volume_density(v), Err(Error::InvalidDensity(_))));
    let f = g.normalized_volume_density(g.sample(|x, _| 2.0 + x)).unwrap();
    assert!((g.integrate(f.values()) - 1.0).abs() < 1e-14);
}

#[test]
fn v_normalize_examples() {
    let g = Geometry::sphere(12, 24).unwrap();
    assert!(g.v_normalize(&vec![3.5; g.len()]).sup_norm() < 1e-14);
    let mut r = rng(4);
    let phi = random_smooth_field(&g, &mut r, 1.0);
    let v = g.v_normalize(&phi);
    assert!(g.mean(v.values()).abs() < 1e-12);
    let vv = g.v_normalize(v.values());
    assert!(sup_diff(v.values(), vv.values()) < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn laplacian_is_mean_free(seed in any::<u64>(), sphere in any::<bool>()) {
        let g = if sphere { Geometry::sphere(12, 24).unwrap() } else { Geometry::torus(16, 16).unwrap() };
        let mut r = rng(seed);
        let f: Vec<f64> = (0..g.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
        prop_assert!(g.integrate(&g.laplacian(&f)).abs() < 1e-10);
    }

    #[test]
    fn ma_density_is_affine_with_unit_mass(seed in any::<u64>(), a in -2.0f64..2.0, sphere in any::<bool>()) {
        let g = if sphere { Geometry::sphere(12, 24).unwrap() } else { Geometry::torus(16, 16).unwrap() };
        let mut r = rng(seed);
        let p1 = random_smooth_field(&g, &mut r, 1.0);
        let p2 = random_smooth_field(&g, &mut r, 1.0);
        let comb: Vec<f64> = p1.iter().zip(&p2).map(|(x, y)| x + a * y).collect();
        let u = g.ma_density(&comb);
        let u1 = g.ma_density(&p1);
        let u2 = g.ma_density(&p2);
        let lin: Vec<f64> = u1.values().iter().zip(u2.values()).map(|(x, y)| x + a * (y - 1.0)).collect();
        prop_assert!(sup_diff(u.values(), &lin) < 1e-11);
        prop_assert!((g.integrate(u.values()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pointwise_gram_is_positive_semidefinite(seed in any::<u64>(), k in 1usize..=24) {
        let g = Geometry::sphere(10, 20).unwrap();
        let b = g.section_basis(k).unwrap();
        let mut r = rng(seed);
        let c: Vec<C64> = (0..=k).map(|_| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
        for p in 0..g.len() {
            let mut q = C64::new(0.0, 0.0);
            for i in 0..=k {
                for j in 0..=k {
                    q += c[i].conj() * c[j] * b.gram_ref(p, i, j);
                }
            }
            prop_assert!(q.re >= -1e-15 * (1.0 + q.norm()));
            prop_assert!(q.im.abs() <= 1e-14 * (1.0 + q.norm()));
        }
    }
}
