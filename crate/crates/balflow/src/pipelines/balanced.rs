//! `T_k` iteration and balancing flow for each `k`.

use balflow_core::balancing::run_balancing_flow;
use balflow_core::moment::{dist_geodesic, dist_geodesic_projective};
use balflow_core::quantization::{self as q, HermitianInnerProduct, TkControls};
use balflow_core::{DensityField, Geometry};
use serde::Serialize;

use super::*;
use crate::config::ExperimentConfig;
use crate::output::write_field;
use crate::{pool, Artifacts};

#[derive(Debug, Clone, Serialize)]
pub struct BalancedK {
    pub k: usize,
    pub tk_iterations: usize,
    pub tk_mu0_hs: f64,
    pub tk_seeded_iterations: usize,
    /// Sup-difference, up to a constant, of the Fubini–Study potentials
    /// reached from the standard and the seeded start.
    pub start_spread: f64,
    pub flow_converged: bool,
    pub flow_steps: usize,
    pub flow_rejected: usize,
    pub flow_t: f64,
    pub flow_mu0_hs: f64,
    /// Geodesic distance between the flow limit and the `T_k` limit, both
    /// rescaled by `normalize_scale`.
    pub agreement_distance: f64,
    pub agreement_projective: f64,
    /// `‖u_k/f − 1‖_∞` for the density `u_k` of the balanced metric.
    pub density_ratio_error: f64,
    /// `T_k` limit from the standard start, rescaled by `normalize_scale`.
    #[serde(skip)]
    pub balanced: Option<HermitianInnerProduct>,
    /// The same from the seeded start.
    #[serde(skip)]
    pub balanced_seeded: Option<HermitianInnerProduct>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BalancedReport {
    pub runs: Vec<BalancedK>,
}

pub(crate) fn run(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Artifacts<BalancedReport>, HarnessError> {
    cfg.require_sections()?;
    let geom = cfg.geometry()?;
    let omega = cfg.omega_density(&geom)?;
    let results = pool::par_map(&cfg.k, ctx.threads, |&k| one_k(cfg, ctx, &geom, &omega, k));
    let (runs, files) = collect(results)?;
    Ok(Artifacts { report: BalancedReport { runs }, files })
}

fn one_k(
    cfg: &ExperimentConfig,
    ctx: &RunContext,
    geom: &Geometry,
    omega: &DensityField,
    k: usize,
) -> Result<(BalancedK, Vec<OutputFile>), HarnessError> {
    let basis = geom.section_basis(k)?;
    let tk_controls = TkControls { tolerance: cfg.tk.tolerance, max_iterations: cfg.tk.max_iterations };
    let h0 = standard_start(&basis, omega)?;
    let seeded = seeded_perturbation(&h0, stream_seed(cfg.seed, k, 1), cfg.tk.start_perturbation)?;
    let mut files = Vec::new();

    let mut sink = open_trace(ctx, &format!("tk_k{k}.csv"))?;
    let tk = q::tk_iterate_traced(&basis, &h0, omega, tk_controls, &mut sink)?;
    files.push(closed(&sink));
    let mut sink = open_trace(ctx, &format!("tk_seeded_k{k}.csv"))?;
    let tk_seeded = q::tk_iterate_traced(&basis, &seeded, omega, tk_controls, &mut sink)?;
    files.push(closed(&sink));
    let psi = q::fs(&basis, &tk.h)?;
    let psi_seeded = q::fs(&basis, &tk_seeded.h)?;
    let start_spread = spread_mod_constant(geom, psi.potential().values(), psi_seeded.potential().values());

    let mut sink = open_trace(ctx, &format!("flow_k{k}.csv"))?;
    let flow = run_balancing_flow(&h0, &basis, omega, cfg.balancing.t_end, &cfg.balancing.controls(Vec::new()), &mut sink)?;
    files.push(closed(&sink));
    let a = q::normalize_scale(&basis, &flow.state.h)?;
    let b = q::normalize_scale(&basis, &tk.h)?;
    let agreement_distance = dist_geodesic(&a, &b, k)?;
    let agreement_projective = dist_geodesic_projective(&flow.state.h, &tk.h, k)?;

    let u = q::fs_kahler_density(geom, &basis, &tk.h)?;
    let ratio: Vec<f64> = u.values().iter().zip(omega.values()).map(|(u, f)| u / f - 1.0).collect();
    let density_ratio_error = ratio.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let name = format!("fs_density_k{k}.csv");
    write_field(&ctx.path(&name), geom, "u", u.values())?;
    files.push(table_file(&name, u.len()));
    files.push(write_matrix(ctx, &format!("balanced_k{k}.csv"), &b)?);

    let report = BalancedK {
        k,
        tk_iterations: tk.iterations,
        tk_mu0_hs: *tk.residuals.last().unwrap_or(&f64::NAN),
        tk_seeded_iterations: tk_seeded.iterations,
        start_spread,
        flow_converged: flow.converged,
        flow_steps: flow.steps,
        flow_rejected: flow.rejected,
        flow_t: flow.state.t,
        flow_mu0_hs: flow.state.moment.mu0_hs,
        agreement_distance,
        agreement_projective,
        density_ratio_error,
        balanced: Some(b),
        balanced_seeded: Some(q::normalize_scale(&basis, &tk_seeded.h)?),
    };
    Ok((report, files))
}
