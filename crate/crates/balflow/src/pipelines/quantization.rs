//! The Ω-Kähler flow against the balancing flows: densities, distances to
//! the Bergman path and potential rates at the sample times.

use balflow_core::balancing::{bergman_path_of, run_balancing_flow};
use balflow_core::fit::log_log_slope;
use balflow_core::kahler_flow::run_omega_kahler_flow;
use balflow_core::moment::dist_geodesic;
use balflow_core::quantization::{self as q, FibrewiseMetric};
use balflow_core::{DensityField, Geometry};
use serde::Serialize;

use super::*;
use crate::config::ExperimentConfig;
use crate::output::write_table;
use crate::{pool, Artifacts};

pub const TABLE_COLUMNS: [&str; 6] = ["k", "t", "density_distance", "bergman_distance", "bergman_distance_rms", "rate_error"];

#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub k: usize,
    pub t: f64,
    /// `sup |u_k(t) − u(t)|`: density of the balancing flow vs the PDE.
    pub density_distance: f64,
    /// `dist_k(h_k(t), Hilb_Ω(h_t^k))`.
    pub bergman_distance: f64,
    /// `bergman_distance/√(N+1)`: the root mean square of the eigenvalues
    /// of the relative logarithm, divided by `k`.
    pub bergman_distance_rms: f64,
    /// `sup |∂_t ψ̂_k − ∂_t φ|`, both by centred differences.
    pub rate_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeSummary {
    pub t: f64,
    pub density_strictly_decreasing: bool,
    pub density_slope: Option<f64>,
    pub bergman_slope: Option<f64>,
    pub bergman_rms_slope: Option<f64>,
    pub rate_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantizationReport {
    pub pde_steps: usize,
    pub rows: Vec<SampleRow>,
    pub times: Vec<TimeSummary>,
}

struct PdeSample {
    t: f64,
    phi: DensityField,
    u: DensityField,
    before: DensityField,
    after: DensityField,
}

pub(crate) fn run(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Artifacts<QuantizationReport>, HarnessError> {
    cfg.require_sections()?;
    let geom = cfg.geometry()?;
    let omega = cfg.omega_density(&geom)?;
    let delta = cfg.quantization.derivative_step;
    let mut times = cfg.quantization.sample_times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut snap_times: Vec<f64> = times.iter().flat_map(|t| [t - delta, *t, t + delta]).collect();
    snap_times.sort_by(f64::total_cmp);
    let t_max = snap_times.last().copied().unwrap_or(0.0);
    let mut controls = cfg.pde.controls(geom.kind(), snap_times);
    controls.t_max = t_max;
    controls.tolerance = 0.0;
    let mut sink = open_trace(ctx, "pde.csv")?;
    let pde = run_omega_kahler_flow(&geom, &omega, &controls, &mut sink)?;
    let mut files = vec![closed(&sink)];
    let at = |t: f64| -> Result<DensityField, HarnessError> {
        pde.snapshots
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-12 * t.max(1.0))
            .map(|(_, phi)| phi.clone())
            .ok_or_else(|| HarnessError::Numerical(balflow_core::Error::InvalidArgument(format!("no PDE snapshot at t = {t}"))))
    };
    let samples = times
        .iter()
        .map(|&t| {
            let phi = at(t)?;
            let u = geom.ma_density(phi.values());
            Ok(PdeSample { t, phi, u, before: at(t - delta)?, after: at(t + delta)? })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let results = pool::par_map(&cfg.k, ctx.threads, |&k| one_k(cfg, ctx, &geom, &omega, &samples, k));
    let (per_k, flow_files) = collect(results)?;
    files.extend(flow_files);
    let rows: Vec<SampleRow> = per_k.into_iter().flatten().collect();

    let table: Vec<Vec<f64>> =
        rows.iter().map(|r| vec![r.k as f64, r.t, r.density_distance, r.bergman_distance, r.bergman_distance_rms, r.rate_error]).collect();
    write_table(&ctx.path("distances.csv"), &TABLE_COLUMNS, &table)?;
    files.push(table_file("distances.csv", table.len()));

    let summaries = times
        .iter()
        .map(|&t| {
            let mut sel: Vec<&SampleRow> = rows.iter().filter(|r| r.t == t).collect();
            sel.sort_by_key(|r| r.k);
            let ks: Vec<f64> = sel.iter().map(|r| r.k as f64).collect();
            let col = |f: &dyn Fn(&SampleRow) -> f64| sel.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let density = col(&|r| r.density_distance);
            TimeSummary {
                t,
                density_strictly_decreasing: density.windows(2).all(|w| w[1] < w[0]),
                density_slope: log_log_slope(&ks, &density),
                bergman_slope: log_log_slope(&ks, &col(&|r| r.bergman_distance)),
                bergman_rms_slope: log_log_slope(&ks, &col(&|r| r.bergman_distance_rms)),
                rate_slope: log_log_slope(&ks, &col(&|r| r.rate_error)),
            }
        })
        .collect();
    Ok(Artifacts { report: QuantizationReport { pde_steps: pde.steps, rows, times: summaries }, files })
}

fn one_k(
    cfg: &ExperimentConfig,
    ctx: &RunContext,
    geom: &Geometry,
    omega: &DensityField,
    samples: &[PdeSample],
    k: usize,
) -> Result<(Vec<SampleRow>, Vec<OutputFile>), HarnessError> {
    let basis = geom.section_basis(k)?;
    let h0 = standard_start(&basis, omega)?;
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let t_end = times.last().copied().unwrap_or(0.0);
    let mut controls = cfg.balancing.controls(times);
    controls.tolerance = 0.0;
    let mut sink = open_trace(ctx, &format!("flow_k{k}.csv"))?;
    let flow = run_balancing_flow(&h0, &basis, omega, t_end, &controls, &mut sink)?;
    let files = vec![closed(&sink)];

    let metric = |phi: &DensityField| FibrewiseMetric::new(k, phi.clone());
    let mut rows = Vec::new();
    for s in samples {
        let snap = flow.snapshots.iter().find(|x| x.t == s.t).ok_or_else(|| {
            HarnessError::Numerical(balflow_core::Error::InvalidArgument(format!("no balancing snapshot at t = {}", s.t)))
        })?;
        let uk = q::fs_kahler_density(geom, &basis, &snap.h)?;
        let path = bergman_path_of(
            &[(s.t - cfg.quantization.derivative_step, metric(&s.before)), (s.t, metric(&s.phi)), (s.t + cfg.quantization.derivative_step, metric(&s.after))],
            &basis,
            omega,
        )?;
        let bergman_distance = dist_geodesic(&snap.h, &path[1].1, k)?;
        let before = q::fs(&basis, &path[0].1)?;
        let after = q::fs(&basis, &path[2].1)?;
        let two_delta = 2.0 * cfg.quantization.derivative_step;
        let rate_error = (0..geom.len())
            .map(|p| {
                let bergman = (after.potential().values()[p] - before.potential().values()[p]) / two_delta;
                let pde = (s.after.values()[p] - s.before.values()[p]) / two_delta;
                (bergman - pde).abs()
            })
            .fold(0.0, f64::max);
        rows.push(SampleRow {
            k,
            t: s.t,
            density_distance: sup_diff(uk.values(), s.u.values()),
            bergman_distance,
            bergman_distance_rms: bergman_distance / (basis.dim() as f64).sqrt(),
            rate_error,
        });
    }
    Ok((rows, files))
}
