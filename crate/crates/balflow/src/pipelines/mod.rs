//! The four experiment pipelines.

pub mod asymptotics;
pub mod balanced;
pub mod calabi;
pub mod quantization;

use balflow_core::linalg::{HermitianMatrix, C64};
use balflow_core::quantization::{self as q, FibrewiseMetric, HermitianInnerProduct};
use balflow_core::{DensityField, Geometry, SectionBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::HarnessError;
use crate::output::{CsvSink, OutputFile};
use crate::RunContext;

/// `Hilb_Ω(h_ref^k)`, the start shared by the flows.
pub(crate) fn standard_start(basis: &SectionBasis, omega: &DensityField) -> Result<HermitianInnerProduct, HarnessError> {
    Ok(q::hilb_omega(basis, &FibrewiseMetric::reference(basis.k(), basis.nodes()), omega)?)
}

/// `e^{A}` congruence of `h` for a seeded Hermitian `A` with `‖A‖_op = amplitude`.
pub(crate) fn seeded_perturbation(
    h: &HermitianInnerProduct,
    seed: u64,
    amplitude: f64,
) -> Result<HermitianInnerProduct, HarnessError> {
    let n = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = HermitianMatrix::from_fn(n, |i, j| {
        if i >= j {
            C64::new(rng.gen_range(-1.0..1.0), if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) })
        } else {
            C64::new(0.0, 0.0)
        }
    });
    lower = HermitianMatrix::from_lower(lower.0);
    let norm = lower.op_norm();
    let a = if norm > 0.0 { lower.scale(amplitude / norm) } else { lower };
    Ok(HermitianInnerProduct::new(h.k(), a.expm().congruence(&h.frame()?.l))?)
}

/// Per-`k` seed, so each run owns its random stream.
pub(crate) fn stream_seed(seed: u64, k: usize, stream: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((k as u64) << 32) ^ stream
}

/// `sup |a − b − mean(a − b)|`.
pub(crate) fn spread_mod_constant(geom: &Geometry, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = geom.mean(&d);
    d.iter().map(|v| (v - m).abs()).fold(0.0, f64::max)
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub(crate) fn open_trace(ctx: &RunContext, name: &str) -> Result<CsvSink, HarnessError> {
    CsvSink::create(&ctx.path(name))
}

pub(crate) fn closed(sink: &CsvSink) -> OutputFile {
    OutputFile { name: file_name(sink.path()), rows: sink.rows() }
}

pub(crate) fn table_file(name: &str, rows: usize) -> OutputFile {
    OutputFile { name: name.to_string(), rows }
}

fn file_name(path: &std::path::Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Collects per-task results in order, failing on the first error.
pub(crate) fn collect<R>(results: Vec<Result<(R, Vec<OutputFile>), HarnessError>>) -> Result<(Vec<R>, Vec<OutputFile>), HarnessError> {
    let mut reports = Vec::new();
    let mut files = Vec::new();
    for r in results {
        let (report, f) = r?;
        reports.push(report);
        files.extend(f);
    }
    Ok((reports, files))
}

/// Writes the Hermitian matrix as `i, j, re, im` rows.
pub(crate) fn write_matrix(ctx: &RunContext, name: &str, h: &HermitianInnerProduct) -> Result<OutputFile, HarnessError> {
    let n = h.dim();
    let rows: Vec<Vec<f64>> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let z = h.matrix().get(i, j);
            vec![i as f64, j as f64, z.re, z.im]
        })
        .collect();
    crate::output::write_table(&ctx.path(name), &["i", "j", "re", "im"], &rows)?;
    Ok(table_file(name, rows.len()))
}
