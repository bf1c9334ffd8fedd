//! The rescaled balancing flow on the Bergman space.
//!
//! The embedding moves with velocity `A = −k² μ⁰_Ω` (the `−k μ⁰_Ω` flow of
//! the volume form `kΩ`), so that the Fubini–Study potential satisfies
//! `ψ̇ = β_k = −k tr(μ⁰_Ω μ)` and tracks the Ω-Kähler flow as `k` grows.
//! Steps are exponential Euler in the orthonormal frame:
//! `H' = L exp(δt k² μ⁰_Ω) L*`, which keeps `H'` positive definite and,
//! `μ⁰_Ω` being trace-free, keeps `det H` fixed.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{DensityField, SectionBasis};
use crate::linalg::{Cholesky, HermitianMatrix};
use crate::moment::{self, MomentMapValue};
use crate::quantization::{self, FibrewiseMetric, HermitianInnerProduct};
use crate::trace::TraceSink;

pub const BALANCING_COLUMNS: [&str; 5] = ["t", "dt", "mu0_hs", "mu_op", "rejected_steps"];

#[derive(Debug, Clone, PartialEq)]
pub struct BalancingControls {
    /// First trial step.
    pub dt: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    /// A step is rejected when `‖μ⁰_Ω‖_HS` grows by more than this factor
    /// minus one.
    pub growth_tolerance: f64,
    /// Step growth after an accepted step.
    pub dt_growth: f64,
    /// Stop once `‖μ⁰_Ω‖_HS` is below this.
    pub tolerance: f64,
    pub max_steps: usize,
    pub snapshot_times: Vec<f64>,
}

impl Default for BalancingControls {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            dt_max: 1e-3,
            dt_min: 1e-12,
            growth_tolerance: 1e-6,
            dt_growth: 1.25,
            tolerance: 0.0,
            max_steps: 1_000_000,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BalancingFlowState {
    pub t: f64,
    pub h: HermitianInnerProduct,
    /// `H = L L*`, frame factor `C = L⁻¹`.
    pub frame: Cholesky,
    pub moment: MomentMapValue,
    /// Step proposed for the next advance.
    pub dt: f64,
}

impl BalancingFlowState {
    pub fn new(basis: &SectionBasis, h: HermitianInnerProduct, omega: &DensityField, t: f64, dt: f64) -> Result<Self> {
        let frame = h.frame()?;
        let moment = moment::moment_map_in_frame(basis, &frame.l_inv, omega);
        Ok(Self { t, h, frame, moment, dt })
    }

    /// `‖C H C* − Id‖_HS`.
    pub fn frame_defect(&self) -> f64 {
        let m = self.h.matrix().congruence(&self.frame.l_inv);
        (&m - &HermitianMatrix::identity(m.dim())).hs_norm()
    }

    /// Embedding velocity `−k² μ⁰_Ω` in the current frame.
    pub fn velocity(&self) -> HermitianMatrix {
        let k = self.h.k() as f64;
        self.moment.mu0.scale(-k * k)
    }

    pub fn fs_metric(&self, basis: &SectionBasis) -> Result<FibrewiseMetric> {
        quantization::fs(basis, &self.h)
    }
}

/// One exponential-Euler step of length `dt`.
pub fn balancing_flow_step(
    state: &BalancingFlowState,
    basis: &SectionBasis,
    omega: &DensityField,
    dt: f64,
) -> Result<BalancingFlowState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("step {dt} must be positive")));
    }
    let g = state.velocity().scale(-dt).expm();
    let next = g.congruence(&state.frame.l);
    let h = HermitianInnerProduct::new(state.h.k(), next)?;
    BalancingFlowState::new(basis, h, omega, state.t + dt, state.dt)
}

#[derive(Debug, Clone)]
pub struct BalancingSnapshot {
    pub t: f64,
    pub h: HermitianInnerProduct,
}

#[derive(Debug, Clone)]
pub struct BalancingRun {
    pub state: BalancingFlowState,
    pub snapshots: Vec<BalancingSnapshot>,
    /// `‖μ⁰_Ω‖_HS` fell below the tolerance.
    pub converged: bool,
    pub steps: usize,
    pub rejected: usize,
}

/// Adaptive exponential Euler from `h0` to `t_end` (or until `‖μ⁰_Ω‖_HS`
/// is below `controls.tolerance`), writing one row of
/// [`BALANCING_COLUMNS`] per accepted step after the initial one.
pub fn run_balancing_flow(
    h0: &HermitianInnerProduct,
    basis: &SectionBasis,
    omega: &DensityField,
    t_end: f64,
    controls: &BalancingControls,
    sink: &mut dyn TraceSink,
) -> Result<BalancingRun> {
    let mut state = BalancingFlowState::new(basis, h0.clone(), omega, 0.0, controls.dt.min(controls.dt_max))?;
    let mut snaps: Vec<f64> = controls.snapshot_times.iter().copied().filter(|t| *t >= 0.0 && *t <= t_end).collect();
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    let mut next_snap = 0;
    let mut snapshots = Vec::new();
    let take_snapshots = |state: &BalancingFlowState, next: &mut usize, out: &mut Vec<BalancingSnapshot>| {
        while *next < snaps.len() && snaps[*next] <= state.t {
            out.push(BalancingSnapshot { t: state.t, h: state.h.clone() });
            *next += 1;
        }
    };

    sink.begin(&BALANCING_COLUMNS)?;
    let (mut steps, mut rejected) = (0usize, 0usize);
    sink.record(&[0.0, 0.0, state.moment.mu0_hs, state.moment.mu_op, 0.0])?;
    take_snapshots(&state, &mut next_snap, &mut snapshots);
    loop {
        if state.moment.mu0_hs < controls.tolerance {
            return Ok(BalancingRun { state, snapshots, converged: true, steps, rejected });
        }
        if state.t >= t_end {
            return Ok(BalancingRun { state, snapshots, converged: false, steps, rejected });
        }
        if steps >= controls.max_steps {
            return Err(Error::NotConverged { steps, residual: state.moment.mu0_hs });
        }
        let target = if next_snap < snaps.len() { snaps[next_snap].min(t_end) } else { t_end };
        let mut dt = state.dt.min(controls.dt_max);
        let landed = state.t + dt >= target * (1.0 - 1e-14);
        if landed {
            dt = target - state.t;
        }
        let mut candidate = balancing_flow_step(&state, basis, omega, dt)?;
        if candidate.moment.mu0_hs > state.moment.mu0_hs * (1.0 + controls.growth_tolerance) {
            rejected += 1;
            state.dt = 0.5 * dt;
            if state.dt < controls.dt_min {
                return Err(Error::StepUnderflow { t: state.t, dt: state.dt });
            }
            continue;
        }
        if landed {
            candidate.t = target;
            candidate.dt = state.dt;
        } else {
            candidate.dt = (dt * controls.dt_growth).min(controls.dt_max);
        }
        state = candidate;
        steps += 1;
        sink.record(&[state.t, dt, state.moment.mu0_hs, state.moment.mu_op, rejected as f64])?;
        take_snapshots(&state, &mut next_snap, &mut snapshots);
    }
}

/// `Hilb_Ω(h_t^k)` along a path of fibrewise metrics; its Fubini–Study
/// image is the comparison path for the balancing flow.
pub fn bergman_path_of(
    path: &[(f64, FibrewiseMetric)],
    basis: &SectionBasis,
    omega: &DensityField,
) -> Result<Vec<(f64, HermitianInnerProduct)>> {
    path.iter()
        .map(|(t, h)| Ok((*t, quantization::hilb_omega(basis, &h.with_k(basis.k()), omega)?)))
        .collect()
}
