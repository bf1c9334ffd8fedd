mod common;

use balflow_core::balancing::*;
use balflow_core::fit;
use balflow_core::kahler_flow::*;
use balflow_core::moment::{self, dist_geodesic};
use balflow_core::quantization::{self, FibrewiseMetric, HermitianInnerProduct, TkControls};
use balflow_core::{math, DensityField, FlowTrace, Geometry, GeometryKind};
use common::*;

fn sphere_setup(k: usize) -> (Geometry, balflow_core::SectionBasis, DensityField) {
    let g = Geometry::sphere(16, 32).unwrap();
    let b = g.section_basis(k).unwrap();
    let omega = g.normalized_volume_density(g.sample(|x, _| 1.0 + 0.3 * x)).unwrap();
    (g, b, omega)
}

fn fixed_step(dt: f64) -> BalancingControls {
    BalancingControls { dt, dt_max: dt, dt_growth: 1.0, growth_tolerance: f64::INFINITY, ..Default::default() }
}

#[test]
fn one_step_moves_the_potential_by_beta() {
    let (_, b, omega) = sphere_setup(6);
    let mut r = rng(4);
    let h = perturbed_round(6, &mut r, 0.3);
    let dt = 1e-4;
    let state = BalancingFlowState::new(&b, h.clone(), &omega, 0.0, dt).unwrap();
    let next = balancing_flow_step(&state, &b, &omega, dt).unwrap();
    let psi0 = quantization::fs(&b, &h).unwrap();
    let psi1 = quantization::fs(&b, &next.h).unwrap();
    let beta = quantization::balancing_potential(&b, &h, &omega).unwrap();
    let rate: Vec<f64> = psi1.potential().values().iter().zip(psi0.potential().values()).map(|(a, c)| (a - c) / dt).collect();
    assert!(sup_diff(&rate, beta.values()) < 1e-3 * beta.sup_norm());
}

#[test]
fn velocity_is_trace_free_and_frame_is_consistent() {
    let (_, b, omega) = sphere_setup(5);
    for seed in 0..10 {
        let mut r = rng(seed);
        let h = perturbed_round(5, &mut r, 0.5);
        let s = BalancingFlowState::new(&b, h, &omega, 0.0, 1e-3).unwrap();
        assert!(s.velocity().trace().abs() < 1e-13);
        assert!(s.frame_defect() < 1e-12);
    }
}

#[test]
fn long_time_limit_is_the_tk_fixed_point() {
    let (_, b, omega) = sphere_setup(6);
    let mut r = rng(21);
    let h0 = perturbed_round(6, &mut r, 0.3);
    let controls = BalancingControls { dt: 0.01, dt_max: 0.3, tolerance: 1e-13, ..Default::default() };
    let mut trace = FlowTrace::new();
    let run = run_balancing_flow(&h0, &b, &omega, 1e3, &controls, &mut trace).unwrap();
    assert!(run.converged);
    let mu0 = trace.column("mu0_hs").unwrap();
    assert!(mu0.windows(2).all(|w| w[1] <= w[0] * (1.0 + controls.growth_tolerance)));
    assert!(fit::strictly_decreasing(&mu0));

    let tk = quantization::tk_iterate(&b, &h0, &omega, TkControls { tolerance: 1e-13, max_iterations: 2000 }).unwrap();
    let a = quantization::normalize_scale(&b, &run.state.h).unwrap();
    let z = quantization::normalize_scale(&b, &tk.h).unwrap();
    assert!(dist_geodesic(&a, &z, 6).unwrap() < 1e-8);
    assert!(moment::dist_geodesic_projective(&run.state.h, &tk.h, 6).unwrap() < 1e-8);
}

#[test]
fn flow_preserves_the_determinant() {
    let (_, b, omega) = sphere_setup(5);
    let mut r = rng(2);
    let h0 = perturbed_round(5, &mut r, 0.3);
    let run = run_balancing_flow(&h0, &b, &omega, 0.5, &fixed_step(0.05), &mut FlowTrace::new()).unwrap();
    let logdet = |h: &HermitianInnerProduct| h.matrix().eigenvalues().iter().map(|v| v.ln()).sum::<f64>();
    assert!((logdet(&run.state.h) - logdet(&h0)).abs() < 1e-10);
}

/// Exponential Euler is first order: halving `dt` halves the error.
#[test]
fn step_halving_ratio() {
    let (_, b, omega) = sphere_setup(5);
    let mut r = rng(6);
    let h0 = perturbed_round(5, &mut r, 0.3);
    let t = 0.2;
    let end = |dt: f64| run_balancing_flow(&h0, &b, &omega, t, &fixed_step(dt), &mut FlowTrace::new()).unwrap().state.h;
    let reference = end(2.5e-5);
    let e1 = dist_geodesic(&end(4e-3), &reference, 5).unwrap();
    let e2 = dist_geodesic(&end(2e-3), &reference, 5).unwrap();
    let ratio = e1 / e2;
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn snapshots_land_on_requested_times() {
    let (_, b, omega) = sphere_setup(4);
    let mut r = rng(1);
    let h0 = perturbed_round(4, &mut r, 0.2);
    let c = BalancingControls { dt: 0.03, dt_max: 0.03, snapshot_times: vec![0.0, 0.1, 0.25], ..Default::default() };
    let run = run_balancing_flow(&h0, &b, &omega, 0.25, &c, &mut FlowTrace::new()).unwrap();
    let ts: Vec<f64> = run.snapshots.iter().map(|s| s.t).collect();
    assert_eq!(ts.len(), 3);
    for (a, e) in ts.iter().zip([0.0, 0.1, 0.25]) {
        assert!((a - e).abs() < 1e-14);
    }
    assert!((run.state.t - 0.25).abs() < 1e-14);
}

#[test]
fn bergman_path_starts_at_the_bergman_metric() {
    let (_, b, omega) = sphere_setup(5);
    let metric = FibrewiseMetric::reference(5, b.nodes());
    let path = bergman_path_of(&[(0.0, metric.clone()), (1.0, metric.clone())], &b, &omega).unwrap();
    let direct = quantization::hilb_omega(&b, &metric, &omega).unwrap();
    assert!((path[0].1.matrix() - direct.matrix()).hs_norm() < 1e-15);
    assert_eq!(path[1].0, 1.0);
}

/// `φ* = 0.3 cos x + 0.2 sin 2y`, `f = 1 + ½Δφ*`; the flow converges to
/// `φ*` up to a constant.
fn torus_oracle(n: usize) -> (Geometry, DensityField, Vec<f64>) {
    let g = Geometry::torus(n, n).unwrap();
    let star = g.sample(|x, y| 0.3 * x.cos() + 0.2 * (2.0 * y).sin());
    let f = g.volume_density(g.sample(|x, y| 1.0 - 0.15 * x.cos() - 0.4 * (2.0 * y).sin())).unwrap();
    (g, f, star)
}

fn centred(g: &Geometry, v: &[f64]) -> Vec<f64> {
    let m = g.mean(v);
    v.iter().map(|x| x - m).collect()
}

#[test]
fn torus_flow_reaches_the_oracle() {
    let (g, f, star) = torus_oracle(16);
    let mut trace = FlowTrace::new();
    let run = run_omega_kahler_flow(&g, &f, &PdeControls::for_geometry(GeometryKind::Torus), &mut trace).unwrap();
    assert!(run.converged);
    assert!(sup_diff(&centred(&g, run.state.phi.values()), &star) < 1e-7);
    assert_eq!(run.max_principle_excess, 0.0);
    assert_eq!(trace.len(), run.steps + 1);

    let f0 = trace.column("f0").unwrap();
    assert!(f0.windows(2).all(|w| w[1] <= w[0] + 1e-13));
    let j = trace.column("aubin_j").unwrap();
    let i = trace.column("aubin_i").unwrap();
    assert!(i.iter().zip(&j).all(|(i, j)| (i - 2.0 * j).abs() < 1e-12));

    let t = trace.column("t").unwrap();
    let e = trace.column("oscillation").unwrap();
    let tail = t.len() / 2;
    let slope = fit::log_linear_slope(&t[tail..], &e[tail..]).unwrap();
    assert!(slope < 0.0, "energy decay rate {slope}");
}

#[test]
fn torus_grid_refinement() {
    let (g1, f1, _) = torus_oracle(16);
    let (g2, f2, _) = torus_oracle(32);
    let c = PdeControls::for_geometry(GeometryKind::Torus);
    let a = run_omega_kahler_flow(&g1, &f1, &c, &mut FlowTrace::new()).unwrap();
    let b = run_omega_kahler_flow(&g2, &f2, &c, &mut FlowTrace::new()).unwrap();
    let coarse = centred(&g1, a.state.phi.values());
    let fine = centred(&g2, b.state.phi.values());
    let mut gap = 0.0f64;
    for i in 0..16 {
        for j in 0..16 {
            gap = gap.max((coarse[i * 16 + j] - fine[2 * i * 32 + 2 * j]).abs());
        }
    }
    assert!(gap < 1e-6, "{gap}");
}

#[test]
fn velocity_integrates_to_zero_against_the_evolving_form() {
    let g = Geometry::sphere(16, 32).unwrap();
    let f = g.normalized_volume_density(g.sample(|x, _| math::exp(0.4 * x))).unwrap();
    for seed in 0..10 {
        let mut r = rng(seed);
        let phi = DensityField::potential(random_smooth_field(&g, &mut r, 0.05));
        let v = omega_kahler_rhs(&g, &phi, &f).unwrap();
        let u = g.ma_density(phi.values());
        assert!(g.inner(v.values(), u.values()).abs() < 1e-12);
    }
}

#[test]
fn flow_aborts_when_positivity_is_lost() {
    let g = Geometry::torus(16, 16).unwrap();
    let phi = g.sample(|x, _| 3.0 * x.cos());
    let f = g.reference_density();
    assert!(matches!(
        omega_kahler_rhs(&g, &DensityField::potential(phi), &f),
        Err(balflow_core::Error::PositivityLost { .. })
    ));
}

#[test]
fn snapshots_of_the_pde_land_on_requested_times() {
    let (g, f, _) = torus_oracle(16);
    let c = PdeControls { snapshot_times: vec![0.0, 0.05, 0.3], t_max: 0.3, ..PdeControls::for_geometry(GeometryKind::Torus) };
    let run = run_omega_kahler_flow(&g, &f, &c, &mut FlowTrace::new()).unwrap();
    let ts: Vec<f64> = run.snapshots.iter().map(|s| s.0).collect();
    assert_eq!(ts, vec![0.0, 0.05, 0.3]);
    assert_eq!(run.state.t, 0.3);
}

/// For `f = εg` the steady state solves `εg + φ = ½Δφ` to first order.
#[test]
fn negative_curvature_flow_linearizes() {
    let g = Geometry::torus(16, 16).unwrap();
    let errs: Vec<f64> = [1e-2, 5e-3]
        .iter()
        .map(|&eps| {
            let f = g.sample(|x, y| eps * (x.cos() + (x + y).sin()));
            let run = run_negative_curvature_flow(&g, &f, 1e-12, 0.8, 100_000).unwrap();
            let lin = g.sample(|x, y| -eps * (x.cos() / 1.5 + (x + y).sin() / 2.0));
            sup_diff(run.phi.values(), &lin)
        })
        .collect();
    let ratio = errs[0] / errs[1];
    assert!((3.5..=4.5).contains(&ratio), "{errs:?}");
}

#[test]
fn balanced_metrics_are_fixed_by_the_tk_map() {
    let (_, b, omega) = sphere_setup(4);
    let out = quantization::tk_iterate(&b, &round_inner_product(4), &omega, TkControls { tolerance: 1e-13, max_iterations: 2000 }).unwrap();
    let s = BalancingFlowState::new(&b, out.h.clone(), &omega, 0.0, 1e-3).unwrap();
    let next = balancing_flow_step(&s, &b, &omega, 0.1).unwrap();
    assert!((next.h.matrix() - out.h.matrix()).hs_norm() < 1e-11 * out.h.matrix().hs_norm());
}
