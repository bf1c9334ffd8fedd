//! Sweeps over `k` of the Bergman density, the Berezin operator and the
//! balancing potential.

use balflow_core::fit::log_log_slope;
use balflow_core::quantization::{self as q, BergmanWeighting, FibrewiseMetric};
use balflow_core::{DensityField, Geometry};
use serde::Serialize;

use super::*;
use crate::config::ExperimentConfig;
use crate::output::write_table;
use crate::{pool, Artifacts};

pub const TEST_FUNCTIONS: usize = 3;

pub const TABLE_COLUMNS: [&str; 9] =
    ["k", "rho_error", "q_error_1", "q_error_2", "q_error_3", "beta_error", "heat_c_1", "heat_c_2", "heat_c_3"];

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsK {
    pub k: usize,
    /// `sup |ρ_k/k − ω_h/Ω|` at the perturbed metric, Ω-weighted.
    pub rho_error: f64,
    /// `sup |Q_k f − f|` for each test function (Ω = ω_ref, round metric).
    pub q_errors: [f64; TEST_FUNCTIONS],
    /// `sup |β_k − (1 − Ω/ω_ref)|` at the Bergman metric of `h_ref`.
    pub beta_error: f64,
    /// Least-squares `c` in `k(Q_k f − Q_k(1) f) ≈ c Δf`.
    pub heat_constants: [f64; TEST_FUNCTIONS],
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    pub runs: Vec<AsymptoticsK>,
    pub rho_slope: Option<f64>,
    pub q_slopes: Vec<Option<f64>>,
    pub beta_slope: Option<f64>,
    pub beta_monotone: bool,
    /// `(max − min)/mean` of the heat constants at the largest `k`.
    pub heat_constant_spread: f64,
}

/// The fixed non-round potential `a(x² + 0.8 sin θ cos φ)`.
pub fn perturbed_potential(geom: &Geometry, a: f64) -> DensityField {
    DensityField::potential(geom.sample(|x, phi| a * (x * x + 0.8 * (1.0 - x * x).sqrt() * phi.cos())))
}

pub fn test_functions(geom: &Geometry) -> [DensityField; TEST_FUNCTIONS] {
    [
        DensityField::generic(geom.sample(|x, _| x)),
        DensityField::generic(geom.sample(|x, phi| (0.5 * x).exp() * (1.0 + 0.3 * (1.0 - x * x).sqrt() * phi.sin()))),
        DensityField::generic(geom.sample(|x, phi| 1.0 / (2.0 + x + 0.5 * (1.0 - x * x).sqrt() * phi.cos()))),
    ]
}

pub(crate) fn run(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Artifacts<AsymptoticsReport>, HarnessError> {
    cfg.require_sections()?;
    let geom = cfg.geometry()?;
    let omega = cfg.omega_density(&geom)?;
    let psi = perturbed_potential(&geom, cfg.asymptotics.metric_perturbation);
    let tests = test_functions(&geom);
    let results = pool::par_map(&cfg.k, ctx.threads, |&k| one_k(&geom, &omega, &psi, &tests, k).map(|r| (r, Vec::new())));
    let (runs, _) = collect(results)?;

    let rows: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| {
            let mut row = vec![r.k as f64, r.rho_error];
            row.extend(r.q_errors);
            row.push(r.beta_error);
            row.extend(r.heat_constants);
            row
        })
        .collect();
    write_table(&ctx.path("asymptotics.csv"), &TABLE_COLUMNS, &rows)?;

    let ks: Vec<f64> = runs.iter().map(|r| r.k as f64).collect();
    let column = |f: &dyn Fn(&AsymptoticsK) -> f64| runs.iter().map(f).collect::<Vec<f64>>();
    let betas = column(&|r| r.beta_error);
    let heat_constant_spread = runs
        .iter()
        .max_by_key(|r| r.k)
        .map(|r| {
            let c = r.heat_constants;
            let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
            (hi - lo) / (c.iter().sum::<f64>() / c.len() as f64)
        })
        .unwrap_or(f64::NAN);
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by_key(|&i| runs[i].k);
    let report = AsymptoticsReport {
        rho_slope: log_log_slope(&ks, &column(&|r| r.rho_error)),
        q_slopes: (0..TEST_FUNCTIONS).map(|i| log_log_slope(&ks, &column(&|r| r.q_errors[i]))).collect(),
        beta_slope: log_log_slope(&ks, &betas),
        beta_monotone: order.windows(2).all(|w| betas[w[1]] < betas[w[0]]),
        heat_constant_spread,
        runs,
    };
    Ok(Artifacts { report, files: vec![table_file("asymptotics.csv", rows.len())] })
}

fn one_k(
    geom: &Geometry,
    omega: &DensityField,
    psi: &DensityField,
    tests: &[DensityField; TEST_FUNCTIONS],
    k: usize,
) -> Result<AsymptoticsK, HarnessError> {
    let basis = geom.section_basis(k)?;
    let kf = k as f64;

    let h = FibrewiseMetric::new(k, psi.clone());
    let rho = q::bergman_density(geom, &basis, &h, BergmanWeighting::Given(omega))?;
    let uh = h.kahler_density(geom)?;
    let rho_error = (0..geom.len())
        .map(|p| (rho.values()[p] / kf - uh.values()[p] / omega.values()[p]).abs())
        .fold(0.0, f64::max);

    let round = FibrewiseMetric::reference(k, geom.len());
    let reference = geom.reference_density();
    let ones = DensityField::generic(vec![1.0; geom.len()]);
    let q1 = q::berezin_qk(&basis, &round, &reference, &ones)?;
    let mut q_errors = [0.0; TEST_FUNCTIONS];
    let mut heat_constants = [0.0; TEST_FUNCTIONS];
    for (i, f) in tests.iter().enumerate() {
        let qf = q::berezin_qk(&basis, &round, &reference, f)?;
        q_errors[i] = sup_diff(qf.values(), f.values());
        let r: Vec<f64> = (0..geom.len()).map(|p| kf * (qf.values()[p] - q1.values()[p] * f.values()[p])).collect();
        let lap = geom.laplacian(f.values());
        heat_constants[i] = geom.inner(&r, &lap) / geom.inner(&lap, &lap);
    }

    let bergman = standard_start(&basis, omega)?;
    let beta = q::balancing_potential(&basis, &bergman, omega)?;
    let target: Vec<f64> = omega.values().iter().map(|f| 1.0 - f).collect();
    let beta_error = sup_diff(beta.values(), &target);

    Ok(AsymptoticsK { k, rho_error, q_errors, beta_error, heat_constants })
}
