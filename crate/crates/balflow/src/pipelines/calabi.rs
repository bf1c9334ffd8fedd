//! The Ω-Kähler flow to convergence, with the optional balanced-metric
//! endgame on the sphere.

use balflow_core::kahler_flow::run_omega_kahler_flow;
use balflow_core::quantization::{self as q, TkControls};
use balflow_core::{DensityField, FlowTrace, Geometry};
use serde::Serialize;

use super::*;
use crate::config::ExperimentConfig;
use crate::output::{write_field, write_table};
use crate::{pool, Artifacts};

#[derive(Debug, Clone, Serialize)]
pub struct EndgameK {
    pub k: usize,
    pub tk_iterations: usize,
    /// `‖u_k/f − 1‖_∞` at the balanced metric.
    pub density_ratio_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalabiReport {
    pub converged: bool,
    pub steps: usize,
    pub t: f64,
    pub ma_residual: f64,
    pub phidot_sup_norm: f64,
    pub max_principle_excess: f64,
    /// Largest `F⁰(t_{i+1}) − F⁰(t_i)` over accepted steps.
    pub max_f0_increment: f64,
    pub f0_final: f64,
    pub endgame: Vec<EndgameK>,
    pub endgame_decreasing: Option<bool>,
    /// Final `φ` with zero mean.
    #[serde(skip)]
    pub potential: Option<DensityField>,
}

pub(crate) fn run(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Artifacts<CalabiReport>, HarnessError> {
    let geom = cfg.geometry()?;
    let omega = cfg.omega_density(&geom)?;
    let controls = cfg.pde.controls(geom.kind(), Vec::new());
    let mut sink = open_trace(ctx, "pde.csv")?;
    let mut trace = FlowTrace::new();
    let run = run_omega_kahler_flow(&geom, &omega, &controls, &mut balflow_core::trace::Tee(&mut sink, &mut trace))?;
    let mut files = vec![closed(&sink)];

    let phi = geom.v_normalize(run.state.phi.values());
    write_field(&ctx.path("phi.csv"), &geom, "phi", phi.values())?;
    files.push(table_file("phi.csv", geom.len()));
    write_field(&ctx.path("u.csv"), &geom, "u", run.state.u.values())?;
    files.push(table_file("u.csv", geom.len()));

    let f0 = trace.column("f0").unwrap_or_default();
    let max_f0_increment = f0.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);

    let mut endgame = Vec::new();
    let mut endgame_decreasing = None;
    if cfg.calabi.endgame {
        cfg.require_sections()?;
        let tk = TkControls { tolerance: cfg.tk.tolerance, max_iterations: cfg.tk.max_iterations };
        endgame = pool::par_map(&cfg.k, ctx.threads, |&k| endgame_k(&geom, &omega, tk, k)).into_iter().collect::<Result<_, _>>()?;
        let rows: Vec<Vec<f64>> =
            endgame.iter().map(|e| vec![e.k as f64, e.tk_iterations as f64, e.density_ratio_error]).collect();
        write_table(&ctx.path("endgame.csv"), &["k", "tk_iterations", "density_ratio_error"], &rows)?;
        files.push(table_file("endgame.csv", rows.len()));
        let mut sorted: Vec<&EndgameK> = endgame.iter().collect();
        sorted.sort_by_key(|e| e.k);
        endgame_decreasing = Some(sorted.windows(2).all(|w| w[1].density_ratio_error < w[0].density_ratio_error));
    }

    let report = CalabiReport {
        converged: run.converged,
        steps: run.steps,
        t: run.state.t,
        ma_residual: run.state.u.sup_distance(&omega),
        phidot_sup_norm: run.state.phi_dot.sup_norm(),
        max_principle_excess: run.max_principle_excess,
        max_f0_increment,
        f0_final: f0.last().copied().unwrap_or(0.0),
        endgame,
        endgame_decreasing,
        potential: Some(phi),
    };
    Ok(Artifacts { report, files })
}

fn endgame_k(geom: &Geometry, omega: &DensityField, controls: TkControls, k: usize) -> Result<EndgameK, HarnessError> {
    let basis = geom.section_basis(k)?;
    let tk = q::tk_iterate(&basis, &standard_start(&basis, omega)?, omega, controls)?;
    let u = q::fs_kahler_density(geom, &basis, &tk.h)?;
    let density_ratio_error = u.values().iter().zip(omega.values()).map(|(u, f)| (u / f - 1.0).abs()).fold(0.0, f64::max);
    Ok(EndgameK { k, tk_iterations: tk.iterations, density_ratio_error })
}
