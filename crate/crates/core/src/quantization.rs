//! Hilbert and Fubini–Study maps between fibrewise metrics on `O(k)` and
//! inner products on `H⁰(O(k))`, with the Bergman function, the Berezin
//! operator `Q_k` and the balancing potential.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{DensityField, FieldRole, Geometry, SectionBasis, MASS_TOLERANCE};
use crate::linalg::{Cholesky, HermitianMatrix, C64};
use crate::math;
use crate::moment;
use crate::trace::{FlowTrace, TraceSink};

/// A point of the Bergman space: positive definite Gram matrix of the
/// monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianInnerProduct {
    k: usize,
    matrix: HermitianMatrix,
}

impl HermitianInnerProduct {
    /// Fails unless `matrix` is Hermitian to 1e-14 (relative) and admits a
    /// Cholesky factor within the condition limit.
    pub fn new(k: usize, matrix: HermitianMatrix) -> Result<Self> {
        if matrix.dim() != k + 1 {
            return Err(Error::InvalidArgument(alloc::format!(
                "inner product of size {} on H⁰(O({k}))",
                matrix.dim()
            )));
        }
        let defect = matrix.hermitian_defect();
        if !(defect <= 1e-14 * matrix.hs_norm().max(f64::MIN_POSITIVE)) {
            return Err(Error::InvalidArgument(alloc::format!("matrix is not Hermitian (defect {defect:e})")));
        }
        matrix.cholesky()?;
        Ok(Self { k, matrix })
    }

    pub(crate) fn new_unchecked(k: usize, matrix: HermitianMatrix) -> Self {
        Self { k, matrix }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.k + 1
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// `H = L L*`; the frame factor is `C = L⁻¹`.
    pub fn frame(&self) -> Result<Cholesky> {
        self.matrix.cholesky()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { k: self.k, matrix: self.matrix.scale(c) }
    }
}

/// `h_ref^k e^{-kψ}` on `O(k)`; `ψ` is on the same scale as a Kähler
/// potential, so `ω_h = ω_ref (1 + ½ Δψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FibrewiseMetric {
    k: usize,
    potential: DensityField,
}

impl FibrewiseMetric {
    pub fn new(k: usize, potential: DensityField) -> Self {
        Self { k, potential: potential.with_role(FieldRole::Potential) }
    }

    pub fn reference(k: usize, nodes: usize) -> Self {
        Self::new(k, DensityField::zeros(nodes, FieldRole::Potential))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn potential(&self) -> &DensityField {
        &self.potential
    }

    /// The same metric on another power `O(k')`.
    pub fn with_k(&self, k: usize) -> Self {
        Self { k, potential: self.potential.clone() }
    }

    /// `ω_h / ω_ref`, failing where it is not positive.
    pub fn kahler_density(&self, geom: &Geometry) -> Result<DensityField> {
        geom.ma_density_checked(self.potential.values(), f64::NAN)
    }
}

/// Which volume form the Bergman function is orthonormalized against.
#[derive(Debug, Clone, Copy)]
pub enum BergmanWeighting<'a> {
    /// `ω_h`, the metric's own Kähler form.
    SmoothVolume,
    Given(&'a DensityField),
}

/// Runs `visit(p, v, s)` with `v = F ê(p)` for the frame matrix `F` and the
/// node log-scale `s` (`e = e^{s} ê`).
pub(crate) fn for_each_frame_value(
    basis: &SectionBasis,
    frame: &DMatrix<C64>,
    mut visit: impl FnMut(usize, &[C64], f64),
) {
    let n = basis.dim();
    let mut v = alloc::vec![C64::new(0.0, 0.0); n];
    for p in 0..basis.nodes() {
        let (e, s) = basis.scaled_values(p);
        for (i, vi) in v.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, ej) in e.iter().enumerate() {
                acc += frame[(i, j)] * ej;
            }
            *vi = acc;
        }
        visit(p, &v, s);
    }
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn check_density(basis: &SectionBasis, omega: &DensityField) -> Result<()> {
    if omega.len() != basis.nodes() {
        return Err(Error::InvalidArgument("volume density lives on another grid".into()));
    }
    if let Some((node, value)) = omega.first_nonpositive() {
        return Err(Error::InvalidDensity(alloc::format!("value {value:e} at node {node} is not positive")));
    }
    let mass: f64 = basis.weights().iter().zip(omega.values()).map(|(w, f)| w * f).sum();
    if !((mass - 1.0).abs() <= MASS_TOLERANCE) {
        return Err(Error::InvalidDensity(alloc::format!("total mass {mass} differs from 1")));
    }
    Ok(())
}

fn check_metric(basis: &SectionBasis, h: &FibrewiseMetric) -> Result<()> {
    if h.k() != basis.k() || h.potential().len() != basis.nodes() {
        return Err(Error::InvalidArgument(alloc::format!(
            "metric on O({}) with {} nodes does not match basis on O({}) with {} nodes",
            h.k(),
            h.potential().len(),
            basis.k(),
            basis.nodes()
        )));
    }
    Ok(())
}

/// `H_{αβ} = ∫ ⟨e_α, e_β⟩_h Ω`.
pub fn hilb_omega(basis: &SectionBasis, h: &FibrewiseMetric, omega: &DensityField) -> Result<HermitianInnerProduct> {
    check_metric(basis, h)?;
    check_density(basis, omega)?;
    let matrix = hilb_weighted(basis, h, omega.values());
    matrix.cholesky()?;
    Ok(HermitianInnerProduct::new_unchecked(basis.k(), matrix))
}

/// `∫ ⟨e_α, e_β⟩_h w ω_ref` for an arbitrary weight `w`; no positivity or
/// mass requirement.
pub fn hilb_weighted(basis: &SectionBasis, h: &FibrewiseMetric, weight: &[f64]) -> HermitianMatrix {
    let n = basis.dim();
    let k = basis.k() as f64;
    let psi = h.potential().values();
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for p in 0..basis.nodes() {
        let (e, s) = basis.scaled_values(p);
        let c = basis.weights()[p] * weight[p] * math::exp(2.0 * s - k * psi[p]);
        for a in 0..n {
            let ea = e[a] * c;
            for b in 0..=a {
                acc[(a, b)] += ea * e[b].conj();
            }
        }
    }
    HermitianMatrix::from_lower(acc)
}

/// The Fubini–Study metric of `H`: `ψ = (1/k) ln(S/(N+1))` with
/// `S = Σ_i |s_i|²_ref` for an `H`-orthonormal basis `s_i`.
pub fn fs(basis: &SectionBasis, h: &HermitianInnerProduct) -> Result<FibrewiseMetric> {
    let chol = h.frame()?;
    let n = basis.dim() as f64;
    let k = basis.k() as f64;
    let mut psi = alloc::vec![0.0; basis.nodes()];
    for_each_frame_value(basis, &chol.l_inv, |p, v, s| {
        psi[p] = (2.0 * s + math::ln(norm_sqr(v)) - math::ln(n)) / k;
    });
    Ok(FibrewiseMetric::new(basis.k(), DensityField::potential(psi)))
}

/// `sup_p |Σ_i |s_i(p)|²_{FS(H)} − (N+1)|` for an `H`-orthonormal `s_i`.
pub fn fs_identity_residual(basis: &SectionBasis, h: &HermitianInnerProduct, metric: &FibrewiseMetric) -> Result<f64> {
    let chol = h.frame()?;
    let n = basis.dim() as f64;
    let k = basis.k() as f64;
    let psi = metric.potential().values();
    let mut worst = 0.0f64;
    for_each_frame_value(basis, &chol.l_inv, |p, v, s| {
        let total = math::exp(2.0 * s - k * psi[p]) * norm_sqr(v);
        worst = worst.max((total - n).abs());
    });
    Ok(worst)
}

/// `T_k(H) = Hilb_Ω(FS(H))`.
pub fn tk_step(basis: &SectionBasis, h: &HermitianInnerProduct, omega: &DensityField) -> Result<HermitianInnerProduct> {
    hilb_omega(basis, &fs(basis, h)?, omega)
}

/// Rescales `H` so that its Fubini–Study potential has zero ω_ref-mean.
///
/// `T_k` commutes with scaling, so its fixed points form rays; this picks one
/// representative. The round fixed point becomes `diag(1/((k+1)C(k,j)))`.
pub fn normalize_scale(basis: &SectionBasis, h: &HermitianInnerProduct) -> Result<HermitianInnerProduct> {
    let metric = fs(basis, h)?;
    let mean: f64 = basis.weights().iter().zip(metric.potential().values()).map(|(w, v)| w * v).sum();
    Ok(h.scaled(math::exp(basis.k() as f64 * mean)))
}

#[derive(Debug, Clone, Copy)]
pub struct TkControls {
    /// Stop once `‖μ⁰_Ω‖_HS` falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TkControls {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct TkOutcome {
    pub h: HermitianInnerProduct,
    pub iterations: usize,
    /// `‖μ⁰_Ω‖_HS` before each step and at the end.
    pub residuals: Vec<f64>,
}

/// Iterates `T_k` with [`normalize_scale`] after every step until the
/// trace-free moment map is below tolerance.
///
/// Uses `T_k(H) = (N+1) L μ_Ω L*` with `H = LL*`, which equals
/// [`tk_step`] and reuses the moment map needed for the stopping test.
pub fn tk_iterate(
    basis: &SectionBasis,
    h0: &HermitianInnerProduct,
    omega: &DensityField,
    controls: TkControls,
) -> Result<TkOutcome> {
    tk_iterate_traced(basis, h0, omega, controls, &mut FlowTrace::new())
}

/// Columns written by [`tk_iterate_traced`]; `t` is the iteration count.
pub const TK_COLUMNS: [&str; 3] = ["t", "mu0_hs", "mu_op"];

/// [`tk_iterate`], writing one row of [`TK_COLUMNS`] per iterate.
pub fn tk_iterate_traced(
    basis: &SectionBasis,
    h0: &HermitianInnerProduct,
    omega: &DensityField,
    controls: TkControls,
    sink: &mut dyn TraceSink,
) -> Result<TkOutcome> {
    check_density(basis, omega)?;
    sink.begin(&TK_COLUMNS)?;
    let n = basis.dim() as f64;
    let mut h = normalize_scale(basis, h0)?;
    let mut residuals = Vec::new();
    for iteration in 0..=controls.max_iterations {
        let chol = h.frame()?;
        let mu = moment::moment_map_in_frame(basis, &chol.l_inv, omega);
        residuals.push(mu.mu0_hs);
        sink.record(&[iteration as f64, mu.mu0_hs, mu.mu_op])?;
        if mu.mu0_hs < controls.tolerance {
            return Ok(TkOutcome { h, iterations: iteration, residuals });
        }
        if iteration == controls.max_iterations {
            break;
        }
        let next = HermitianMatrix::from_matrix(&chol.l * mu.mu.as_matrix() * chol.l.adjoint()).scale(n);
        h = normalize_scale(basis, &HermitianInnerProduct::new(basis.k(), next)?)?;
    }
    Err(Error::NotConverged { steps: controls.max_iterations, residual: *residuals.last().unwrap_or(&f64::NAN) })
}

/// Bergman function `ρ_k(h) = Σ_i |s_i|²_{h^k}`, `s_i` orthonormal for the
/// chosen weighting.
pub fn bergman_density(
    geom: &Geometry,
    basis: &SectionBasis,
    h: &FibrewiseMetric,
    weighting: BergmanWeighting<'_>,
) -> Result<DensityField> {
    check_metric(basis, h)?;
    let own;
    let omega = match weighting {
        BergmanWeighting::SmoothVolume => {
            own = h.kahler_density(geom)?.with_role(FieldRole::VolumeDensity);
            &own
        }
        BergmanWeighting::Given(omega) => omega,
    };
    let gram = hilb_omega(basis, h, omega)?;
    let chol = gram.frame()?;
    let k = basis.k() as f64;
    let psi = h.potential().values();
    let mut rho = alloc::vec![0.0; basis.nodes()];
    for_each_frame_value(basis, &chol.l_inv, |p, v, s| {
        rho[p] = math::exp(2.0 * s - k * psi[p]) * norm_sqr(v);
    });
    Ok(DensityField::generic(rho))
}

/// Values `ṽ(p)` of an `Hilb_Ω(h^k)`-orthonormal basis measured in `h^k`.
fn weighted_frame_values(basis: &SectionBasis, h: &FibrewiseMetric, omega: &DensityField) -> Result<Vec<C64>> {
    let gram = hilb_omega(basis, h, omega)?;
    let chol = gram.frame()?;
    let n = basis.dim();
    let k = basis.k() as f64;
    let psi = h.potential().values();
    let mut out = alloc::vec![C64::new(0.0, 0.0); basis.nodes() * n];
    for_each_frame_value(basis, &chol.l_inv, |p, v, s| {
        let c = math::exp(s - 0.5 * k * psi[p]);
        for (slot, z) in out[p * n..(p + 1) * n].iter_mut().zip(v) {
            *slot = z * c;
        }
    });
    Ok(out)
}

/// `Q_k f(p) = (1/k) ∫ |Σ_a s_a(p) s̄_a(q)|² f(q) Ω(q)` for an
/// `Hilb_Ω(h^k)`-orthonormal basis.
///
/// Expanding the squared kernel gives `(1/k) ṽ(p)ᵀ M ṽ̄(p)` with
/// `M_ab = ∫ ṽ̄_a ṽ_b f Ω`, which costs one pass over the grid instead of two.
pub fn berezin_qk(
    basis: &SectionBasis,
    h: &FibrewiseMetric,
    omega: &DensityField,
    f: &DensityField,
) -> Result<DensityField> {
    check_metric(basis, h)?;
    let n = basis.dim();
    let vals = weighted_frame_values(basis, h, omega)?;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for p in 0..basis.nodes() {
        let c = basis.weights()[p] * omega.values()[p] * f.values()[p];
        let v = &vals[p * n..(p + 1) * n];
        for a in 0..n {
            let va = v[a].conj() * c;
            for b in 0..n {
                m[(a, b)] += va * v[b];
            }
        }
    }
    let k = basis.k() as f64;
    let out = (0..basis.nodes())
        .map(|p| {
            let v = &vals[p * n..(p + 1) * n];
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..n {
                let mut row = C64::new(0.0, 0.0);
                for b in 0..n {
                    row += m[(a, b)] * v[b].conj();
                }
                acc += v[a] * row;
            }
            acc.re / k
        })
        .collect();
    Ok(DensityField::generic(out))
}

/// Direct double sum over node pairs of the squared Bergman kernel; `O(nodes²)`,
/// for cross-checking [`berezin_qk`] on small grids.
pub fn berezin_qk_direct(
    basis: &SectionBasis,
    h: &FibrewiseMetric,
    omega: &DensityField,
    f: &DensityField,
) -> Result<DensityField> {
    check_metric(basis, h)?;
    let n = basis.dim();
    let vals = weighted_frame_values(basis, h, omega)?;
    let k = basis.k() as f64;
    let out = (0..basis.nodes())
        .map(|p| {
            let vp = &vals[p * n..(p + 1) * n];
            let mut acc = 0.0;
            for q in 0..basis.nodes() {
                let vq = &vals[q * n..(q + 1) * n];
                let kernel: C64 = vp.iter().zip(vq).map(|(a, b)| a * b.conj()).sum();
                acc += basis.weights()[q] * omega.values()[q] * f.values()[q] * kernel.norm_sqr();
            }
            acc / k
        })
        .collect();
    Ok(DensityField::generic(out))
}

/// `β_k = −k tr(μ⁰_Ω(H) μ(p))`.
///
/// The factor `k` puts `β_k` on the scale of the Ω-Kähler flow: at the
/// Bergman metrics of `h` it tends to `1 − Ω/ω_h`, and it is exactly the time
/// derivative of the Fubini–Study potential along the balancing flow of
/// [`crate::balancing`].
pub fn balancing_potential(
    basis: &SectionBasis,
    h: &HermitianInnerProduct,
    omega: &DensityField,
) -> Result<DensityField> {
    let chol = h.frame()?;
    let mu = moment::moment_map_in_frame(basis, &chol.l_inv, omega);
    let k = basis.k() as f64;
    let mut beta = alloc::vec![0.0; basis.nodes()];
    for_each_frame_value(basis, &chol.l_inv, |p, v, _| {
        beta[p] = -k * mu.mu0.quadratic_form(v) / norm_sqr(v);
    });
    Ok(DensityField::generic(beta))
}

/// `ω_ψ/ω_ref` for the Fubini–Study potential of `H`, by the spectral
/// Laplacian of the grid.
pub fn fs_kahler_density(geom: &Geometry, basis: &SectionBasis, h: &HermitianInnerProduct) -> Result<DensityField> {
    fs(basis, h)?.kahler_density(geom)
}

/// Density `ω_k/ω_ref` of `(1/k)` times the pulled-back Fubini–Study form,
/// evaluated from section derivatives rather than by differentiating the
/// potential on the grid.
///
/// With `a = C ê` and `b = C ê'` (see [`SectionBasis::scaled_derivatives`]),
/// `u_k = (|a|²|b|² − |b*a|²) / (k |a|⁴)` after undoing the separate scales.
pub fn fs_kahler_density_exact(basis: &SectionBasis, h: &HermitianInnerProduct) -> Result<DensityField> {
    let chol = h.frame()?;
    let n = basis.dim();
    let k = basis.k() as f64;
    let mut ed = alloc::vec![C64::new(0.0, 0.0); n];
    let mut a = alloc::vec![C64::new(0.0, 0.0); n];
    let mut b = alloc::vec![C64::new(0.0, 0.0); n];
    let mut u = alloc::vec![0.0; basis.nodes()];
    for (p, slot) in u.iter_mut().enumerate() {
        let (e, sa) = basis.scaled_values(p);
        let sb = basis.scaled_derivatives(p, &mut ed);
        chol.to_frame(e, &mut a);
        chol.to_frame(&ed, &mut b);
        let aa = norm_sqr(&a);
        let bb = norm_sqr(&b);
        let ba: C64 = b.iter().zip(&a).map(|(x, y)| x.conj() * y).sum();
        let ratio = (aa * bb - ba.norm_sqr()) / (aa * aa);
        *slot = ratio * math::exp(2.0 * (sb - sa)) / k;
    }
    Ok(DensityField::new(u, FieldRole::MaDensity))
}
