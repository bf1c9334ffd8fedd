//! Least-squares rate fits used by the asymptotic diagnostics.

use crate::math;

/// Slope of the least-squares line through `(log x, log y)`.
///
/// Returns `None` if fewer than two points are given or any value is not
/// strictly positive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let n = xs.len() as f64;
    let lx: alloc::vec::Vec<f64> = xs.iter().map(|v| math::ln(*v)).collect();
    let ly: alloc::vec::Vec<f64> = ys.iter().map(|v| math::ln(*v)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}

/// Least-squares rate of exponential decay: slope of `log y` against `t`.
pub fn log_linear_slope(ts: &[f64], ys: &[f64]) -> Option<f64> {
    if ts.len() != ys.len() || ts.len() < 2 || ys.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let n = ts.len() as f64;
    let ly: alloc::vec::Vec<f64> = ys.iter().map(|v| math::ln(*v)).collect();
    let mt = ts.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sty: f64 = ts.iter().zip(&ly).map(|(a, b)| (a - mt) * (b - my)).sum();
    let stt: f64 = ts.iter().map(|a| (a - mt) * (a - mt)).sum();
    Some(sty / stt)
}

/// `true` if every entry is strictly smaller than its predecessor.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}
