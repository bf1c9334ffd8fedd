//! Monomial basis of `H⁰(O(k))` on the sphere, stored in log-magnitude and
//! phase form.

use alloc::vec::Vec;

use super::sphere::SphereGrid;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::math;

pub const MAX_K: usize = 64;

/// Values of `e_j = z^j` in the chart `z = tan(θ/2) e^{iφ}`, measured with the
/// reference weight `(1 + |z|²)^{-k}`.
///
/// With `x = cos θ`, `|e_j|²_ref = (1 − x)^j (1 + x)^{k−j} / 2^k`, so the
/// magnitude is taken in log form and the chart at the other pole is never
/// needed for the values themselves.
#[derive(Debug, Clone)]
pub struct SectionBasis {
    k: usize,
    nodes: usize,
    cos_theta: Vec<f64>,
    azimuth: Vec<f64>,
    /// Quadrature weights for `ω_ref`.
    weights: Vec<f64>,
    /// `½ ln |e_j|²_ref` at `p * (k + 1) + j`.
    log_mag: Vec<f64>,
    /// `s_p = max_j log_mag`.
    log_scale: Vec<f64>,
    /// `ê_j = e^{-s_p} e_j` including its phase.
    scaled: Vec<C64>,
}

impl SectionBasis {
    pub fn new(grid: &SphereGrid, k: usize) -> Result<Self> {
        if k == 0 || k > MAX_K {
            return Err(Error::InvalidArgument(alloc::format!(
                "line bundle power k = {k} outside 1..={MAX_K}"
            )));
        }
        let nodes = grid.len();
        let n = k + 1;
        let mut cos_theta = Vec::with_capacity(nodes);
        let mut azimuth = Vec::with_capacity(nodes);
        let mut log_mag = Vec::with_capacity(nodes * n);
        let mut log_scale = Vec::with_capacity(nodes);
        let mut scaled = Vec::with_capacity(nodes * n);
        for p in 0..nodes {
            let (x, phi) = grid.point(p);
            cos_theta.push(x);
            azimuth.push(phi);
            let (lm, lp) = (math::ln(1.0 - x), math::ln(1.0 + x));
            let mut top = f64::NEG_INFINITY;
            for j in 0..n {
                let v = 0.5 * (j as f64 * lm + (k - j) as f64 * lp - k as f64 * core::f64::consts::LN_2);
                if !v.is_finite() || 2.0 * v > 700.0 {
                    return Err(Error::InvalidGrid(alloc::format!(
                        "section e_{j} has non-finite reference norm at node {p}"
                    )));
                }
                top = top.max(v);
                log_mag.push(v);
            }
            for j in 0..n {
                let a = j as f64 * phi;
                let r = math::exp(log_mag[p * n + j] - top);
                scaled.push(C64::new(r * math::cos(a), r * math::sin(a)));
            }
            log_scale.push(top);
        }
        let weights = grid.weights().to_vec();
        Ok(Self { k, nodes, cos_theta, azimuth, weights, log_mag, log_scale, scaled })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of sections `N + 1 = k + 1`.
    pub fn dim(&self) -> usize {
        self.k + 1
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(cos θ, φ)` of node `p`.
    pub fn point(&self, p: usize) -> (f64, f64) {
        (self.cos_theta[p], self.azimuth[p])
    }

    /// Writes `ê_j` with `e_j = e^{s} ê_j` (reference weight included) and
    /// returns `s`. The largest `|ê_j|` is 1.
    pub fn scaled_values(&self, p: usize) -> (&[C64], f64) {
        let n = self.dim();
        (&self.scaled[p * n..(p + 1) * n], self.log_scale[p])
    }

    /// `½ ln |e_j(p)|²_ref`.
    pub fn log_norm(&self, p: usize, j: usize) -> f64 {
        self.log_mag[p * self.dim() + j]
    }

    /// Pointwise Gram entry `⟨e_i, e_j⟩_ref(p) = z^i z̄^j (1 + |z|²)^{-k}`.
    pub fn gram_ref(&self, p: usize, i: usize, j: usize) -> C64 {
        let n = self.dim();
        let s = self.log_scale[p];
        self.scaled[p * n + i] * self.scaled[p * n + j].conj() * math::exp(2.0 * s)
    }

    /// Pointwise Gram matrix `⟨e_i, e_j⟩_ref` at an arbitrary point, not
    /// necessarily a grid node (the poles included).
    pub fn gram_at(&self, cos_theta: f64, phi: f64) -> Vec<C64> {
        let n = self.dim();
        let k = self.k;
        let x = cos_theta;
        let term = |e: usize, l: f64| if e == 0 { 0.0 } else { e as f64 * l };
        let (lm, lp) = (math::ln(1.0 - x), math::ln(1.0 + x));
        let vals: Vec<C64> = (0..n)
            .map(|j| {
                let v = 0.5 * (term(j, lm) + term(k - j, lp) - k as f64 * core::f64::consts::LN_2);
                let a = j as f64 * phi;
                C64::new(math::cos(a), math::sin(a)) * math::exp(v)
            })
            .collect();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(vals[i] * vals[j].conj());
            }
        }
        out
    }

    /// Chart derivatives of the sections, weighted so that the pulled-back
    /// Fubini–Study density can be formed from scale-free ratios.
    ///
    /// Uses `z` on the northern hemisphere (`x ≥ 0`) and `w = 1/z` on the
    /// southern one, where `e_j` becomes `w^{k−j}`. Writes `ê'_j` with
    /// magnitude `c_j ((1∓x)^{c_j − 1} (1±x)^{k−1−c_j} / 2^{k−2})^{1/2}`
    /// up to the returned log-scale, and phase `e^{ijφ}` (global phases drop
    /// out of every quantity built from these values).
    pub fn scaled_derivatives(&self, p: usize, out: &mut [C64]) -> f64 {
        let n = self.dim();
        let k = self.k;
        let x = self.cos_theta[p];
        let (l_near, l_far) = if x >= 0.0 {
            (math::ln(1.0 - x), math::ln(1.0 + x))
        } else {
            (math::ln(1.0 + x), math::ln(1.0 - x))
        };
        let kf = k as f64;
        let mut logs = alloc::vec![f64::NEG_INFINITY; n];
        for (j, slot) in logs.iter_mut().enumerate() {
            let c = if x >= 0.0 { j } else { k - j };
            if c == 0 {
                continue;
            }
            let a = (c - 1) as f64;
            *slot = math::ln(c as f64)
                + 0.5 * (a * l_near + (kf - 2.0 - a) * l_far - (kf - 2.0) * core::f64::consts::LN_2);
        }
        let s = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let phi = self.azimuth[p];
        for j in 0..n {
            out[j] = if logs[j].is_finite() {
                let a = j as f64 * phi;
                C64::new(math::cos(a), math::sin(a)) * math::exp(logs[j] - s)
            } else {
                C64::new(0.0, 0.0)
            };
        }
        s
    }
}
