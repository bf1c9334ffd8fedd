//! The Ω-Kähler flow `∂φ/∂t = 1 − Ω/ω_φ` and its negative-curvature variant
//! `∂φ/∂t = 1 − e^{f+φ} ω_ref/ω_φ`, both integrated with explicit RK4.
//!
//! The linearization `∂ₜδφ = (f/u²) ½ Δδφ` is stiff with rate up to
//! `½ λ_max sup(f/u²)`; the step is a fixed fraction of the RK4 stability
//! limit for that rate.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{DensityField, FieldRole, Geometry, GeometryKind};
use crate::math;
use crate::trace::TraceSink;

/// Real-axis stability limit of classical RK4.
pub const RK4_STABILITY: f64 = 2.785;

/// Columns written by [`run_omega_kahler_flow`].
pub const PDE_COLUMNS: [&str; 16] = [
    "t",
    "dt",
    "phidot_sup_norm",
    "phidot_sup",
    "phidot_inf",
    "bound_upper",
    "bound_lower",
    "max_principle_excess",
    "v_sup_norm",
    "mean_phi",
    "f0",
    "aubin_i",
    "aubin_j",
    "ma_residual",
    "oscillation",
    "u_min",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PdeControls {
    pub t_max: f64,
    /// Converged once `‖φ̇‖_∞` and `‖u − f‖_∞` are both below this.
    pub tolerance: f64,
    /// Fraction of the RK4 stability limit used as the step.
    pub safety: f64,
    pub max_steps: usize,
    /// Times at which the potential is captured; steps are shortened to land
    /// on them exactly.
    pub snapshot_times: Vec<f64>,
    /// Slack allowed in the maximum-principle monitor.
    pub monitor_tolerance: f64,
}

impl PdeControls {
    pub fn for_geometry(kind: GeometryKind) -> Self {
        let tolerance = match kind {
            GeometryKind::Torus => 1e-8,
            GeometryKind::Sphere => 1e-6,
        };
        Self {
            t_max: 200.0,
            tolerance,
            safety: 0.8,
            max_steps: 1_000_000,
            snapshot_times: Vec::new(),
            monitor_tolerance: 1e-8,
        }
    }
}

/// `φ_t` with its Monge–Ampère density and velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeFlowState {
    pub t: f64,
    pub phi: DensityField,
    pub u: DensityField,
    pub phi_dot: DensityField,
}

impl PdeFlowState {
    pub fn new(geom: &Geometry, f: &DensityField, phi: Vec<f64>, t: f64) -> Result<Self> {
        let u = geom.ma_density_checked(&phi, t)?;
        let phi_dot = rhs_from_density(f, &u);
        Ok(Self { t, phi: DensityField::potential(phi), u, phi_dot })
    }

    pub fn v(&self, geom: &Geometry) -> DensityField {
        geom.v_normalize(self.phi.values())
    }
}

fn rhs_from_density(f: &DensityField, u: &DensityField) -> DensityField {
    DensityField::generic(f.values().iter().zip(u.values()).map(|(f, u)| 1.0 - f / u).collect())
}

/// `1 − f/u_φ`.
pub fn omega_kahler_rhs(geom: &Geometry, phi: &DensityField, f: &DensityField) -> Result<DensityField> {
    let u = geom.ma_density_checked(phi.values(), f64::NAN)?;
    Ok(rhs_from_density(f, &u))
}

/// `E = ∫ (φ̇ − m)² ω_φ` with `m` the ω_φ-mean of `φ̇`.
pub fn oscillation_energy(geom: &Geometry, phi_dot: &DensityField, u: &DensityField) -> f64 {
    let w = geom.weights();
    let mass: f64 = w.iter().zip(u.values()).map(|(w, u)| w * u).sum();
    let m: f64 = w.iter().zip(u.values()).zip(phi_dot.values()).map(|((w, u), d)| w * u * d).sum::<f64>() / mass;
    w.iter().zip(u.values()).zip(phi_dot.values()).map(|((w, u), d)| w * u * (d - m) * (d - m)).sum()
}

fn stable_step(geom: &Geometry, stiffness: f64, safety: f64) -> f64 {
    safety * RK4_STABILITY / (0.5 * geom.spectral_radius() * stiffness)
}

fn rk4<F>(phi: &[f64], dt: f64, k1: Option<&[f64]>, mut rhs: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], f64) -> Result<Vec<f64>>,
{
    let axpy = |a: f64, x: &[f64]| -> Vec<f64> { phi.iter().zip(x).map(|(p, x)| p + a * x).collect() };
    let k1 = match k1 {
        Some(k1) => k1.to_vec(),
        None => rhs(phi, 0.0)?,
    };
    let k2 = rhs(&axpy(0.5 * dt, &k1), 0.5 * dt)?;
    let k3 = rhs(&axpy(0.5 * dt, &k2), 0.5 * dt)?;
    let k4 = rhs(&axpy(dt, &k3), dt)?;
    Ok((0..phi.len()).map(|i| phi[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])).collect())
}

#[derive(Debug, Clone)]
pub struct PdeRun {
    pub state: PdeFlowState,
    pub snapshots: Vec<(f64, DensityField)>,
    pub converged: bool,
    pub steps: usize,
    /// Largest excursion of `φ̇` outside `[inf(1 − f), sup(1 − f)]`.
    pub max_principle_excess: f64,
}

fn diagnostics(geom: &Geometry, f: &DensityField, state: &PdeFlowState, dt: f64, bounds: (f64, f64)) -> Result<Vec<f64>> {
    let phi = state.phi.values();
    let d = &state.phi_dot;
    let (lower, upper) = bounds;
    let excess = (d.sup() - upper).max(lower - d.inf()).max(0.0);
    // Same quantities as `functionals`, reusing the density already held by
    // the state.
    let aubin_i: f64 = phi.iter().zip(state.u.values()).zip(geom.weights()).map(|((p, u), w)| w * p * (1.0 - u)).sum();
    let aubin_j = 0.25 * geom.dirichlet_energy(phi);
    let f0 = aubin_j + phi.iter().zip(f.values()).zip(geom.weights()).map(|((p, f), w)| w * p * (f - 1.0)).sum::<f64>();
    Ok(alloc::vec![
        state.t,
        dt,
        d.sup_norm(),
        d.sup(),
        d.inf(),
        upper,
        lower,
        excess,
        state.v(geom).sup_norm(),
        geom.mean(phi),
        f0,
        aubin_i,
        aubin_j,
        state.u.sup_distance(f),
        oscillation_energy(geom, d, &state.u),
        state.u.inf(),
    ])
}

/// Integrates from `φ = 0` until converged or `t_max`, writing one row of
/// [`PDE_COLUMNS`] per accepted step (the initial state included).
pub fn run_omega_kahler_flow(
    geom: &Geometry,
    f: &DensityField,
    controls: &PdeControls,
    sink: &mut dyn TraceSink,
) -> Result<PdeRun> {
    if f.role() != FieldRole::VolumeDensity {
        geom.volume_density(f.values().to_vec())?;
    }
    let one_minus_f: Vec<f64> = f.values().iter().map(|v| 1.0 - v).collect();
    let bounds = (math::min(&one_minus_f), math::max(&one_minus_f));
    let mut snaps: Vec<f64> = controls.snapshot_times.iter().copied().filter(|t| *t >= 0.0).collect();
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    let mut next_snap = 0;
    let mut snapshots = Vec::new();

    let mut state = PdeFlowState::new(geom, f, alloc::vec![0.0; geom.len()], 0.0)?;
    sink.begin(&PDE_COLUMNS)?;
    let mut max_excess = 0.0f64;
    let mut record = |state: &PdeFlowState, dt: f64, sink: &mut dyn TraceSink| -> Result<()> {
        let row = diagnostics(geom, f, state, dt, bounds)?;
        max_excess = max_excess.max(row[7]);
        sink.record(&row)
    };
    record(&state, 0.0, sink)?;
    while next_snap < snaps.len() && snaps[next_snap] <= 0.0 {
        snapshots.push((0.0, state.phi.clone()));
        next_snap += 1;
    }

    let converged = |s: &PdeFlowState| s.phi_dot.sup_norm() < controls.tolerance && s.u.sup_distance(f) < controls.tolerance;
    let mut steps = 0;
    let mut done = converged(&state);
    while !done && state.t < controls.t_max {
        if steps >= controls.max_steps {
            return Err(Error::NotConverged { steps, residual: state.phi_dot.sup_norm() });
        }
        let stiffness = f.values().iter().zip(state.u.values()).map(|(f, u)| f / (u * u)).fold(0.0, f64::max);
        let mut dt = stable_step(geom, stiffness, controls.safety);
        let mut target = controls.t_max;
        if next_snap < snaps.len() {
            target = target.min(snaps[next_snap]);
        }
        let mut landed = false;
        if state.t + dt >= target * (1.0 - 1e-14) {
            dt = target - state.t;
            landed = true;
        }
        if !(dt > 1e-14 * state.t.max(1.0)) {
            return Err(Error::StepUnderflow { t: state.t, dt });
        }
        let t0 = state.t;
        let phi = rk4(state.phi.values(), dt, Some(state.phi_dot.values()), |p, h| {
            let u = geom.ma_density_checked(p, t0 + h)?;
            Ok(f.values().iter().zip(u.values()).map(|(f, u)| 1.0 - f / u).collect())
        })?;
        let t = if landed { target } else { t0 + dt };
        state = PdeFlowState::new(geom, f, phi, t)?;
        steps += 1;
        record(&state, dt, sink)?;
        while next_snap < snaps.len() && snaps[next_snap] <= state.t {
            snapshots.push((state.t, state.phi.clone()));
            next_snap += 1;
        }
        done = converged(&state);
    }
    Ok(PdeRun { state, snapshots, converged: done, steps, max_principle_excess: max_excess })
}

/// `1 − e^{f+φ}/u_φ`; here `f` is an arbitrary smooth function, not a density.
pub fn negative_curvature_rhs(geom: &Geometry, phi: &[f64], f: &[f64], t: f64) -> Result<Vec<f64>> {
    let u = geom.ma_density_checked(phi, t)?;
    Ok(phi.iter().zip(f).zip(u.values()).map(|((p, f), u)| 1.0 - math::exp(f + p) / u).collect())
}

/// One RK4 step of the negative-curvature flow.
pub fn negative_curvature_flow_step(geom: &Geometry, phi: &[f64], f: &[f64], dt: f64) -> Result<Vec<f64>> {
    rk4(phi, dt, None, |p, h| negative_curvature_rhs(geom, p, f, h))
}

/// Step for [`negative_curvature_flow_step`] at a fraction `safety` of the
/// RK4 stability limit.
pub fn negative_curvature_stable_step(geom: &Geometry, phi: &[f64], f: &[f64], safety: f64) -> Result<f64> {
    let u = geom.ma_density_checked(phi, f64::NAN)?;
    let mut rate = 0.0f64;
    for ((p, f), u) in phi.iter().zip(f).zip(u.values()) {
        let e = math::exp(f + p);
        rate = rate.max(0.5 * geom.spectral_radius() * e / (u * u) + e / u);
    }
    Ok(safety * RK4_STABILITY / rate)
}

#[derive(Debug, Clone)]
pub struct NegativeFlowRun {
    pub phi: DensityField,
    pub t: f64,
    pub steps: usize,
    pub residual: f64,
    /// Largest `‖φ̇‖_∞` seen along the run.
    pub max_velocity: f64,
}

/// Integrates the negative-curvature flow from `φ = 0` until `‖φ̇‖_∞ < tol`.
pub fn run_negative_curvature_flow(
    geom: &Geometry,
    f: &[f64],
    tolerance: f64,
    safety: f64,
    max_steps: usize,
) -> Result<NegativeFlowRun> {
    let mut phi = alloc::vec![0.0; geom.len()];
    let mut t = 0.0;
    let mut max_velocity = 0.0f64;
    for steps in 0..=max_steps {
        let v = negative_curvature_rhs(geom, &phi, f, t)?;
        let residual = math::max_abs(&v);
        max_velocity = max_velocity.max(residual);
        if residual < tolerance {
            return Ok(NegativeFlowRun { phi: DensityField::potential(phi), t, steps, residual, max_velocity });
        }
        if steps == max_steps {
            return Err(Error::NotConverged { steps, residual });
        }
        let dt = negative_curvature_stable_step(geom, &phi, f, safety)?;
        phi = negative_curvature_flow_step(geom, &phi, f, dt)?;
        t += dt;
    }
    unreachable!()
}
