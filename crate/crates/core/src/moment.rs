//! Moment map of the Bergman space, its derivative along geodesics, matrix
//! potentials `H_A` and distances.
//!
//! A tangent vector at `H` is a Hermitian `A` acting on the current
//! orthonormal frame. The geodesic it generates is
//! `H(t) = C⁻¹ e^{−tA} C⁻*`, i.e. the frame values move as
//! `v ↦ e^{tA/2} v`; along it the Fubini–Study potential moves at rate
//! `H_A / k` with `H_A(p) = tr(A μ(p))`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{DensityField, SectionBasis};
use crate::linalg::{HermitianMatrix, C64};
use crate::math;
use crate::quantization::{for_each_frame_value, norm_sqr, HermitianInnerProduct};

/// `μ_Ω = ∫ μ(p) Ω(p)` in an orthonormal frame, with `μ(p) = v v*/|v|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMapValue {
    pub mu: HermitianMatrix,
    /// `μ_Ω − (tr μ_Ω/(N+1)) Id`.
    pub mu0: HermitianMatrix,
    pub mu_op: f64,
    pub mu0_hs: f64,
}

impl MomentMapValue {
    pub fn from_mu(mu: HermitianMatrix) -> Self {
        let mu0 = mu.trace_free();
        Self { mu_op: mu.op_norm(), mu0_hs: mu0.hs_norm(), mu, mu0 }
    }
}

/// `μ_Ω` in the frame whose rows are `frame` (so `v = frame · e`).
pub fn moment_map_in_frame(basis: &SectionBasis, frame: &DMatrix<C64>, omega: &DensityField) -> MomentMapValue {
    let n = basis.dim();
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for_each_frame_value(basis, frame, |p, v, _| {
        let c = basis.weights()[p] * omega.values()[p] / norm_sqr(v);
        for a in 0..n {
            let va = v[a] * c;
            for b in 0..=a {
                acc[(a, b)] += va * v[b].conj();
            }
        }
    });
    MomentMapValue::from_mu(HermitianMatrix::from_lower(acc))
}

/// `μ_Ω(H)` in the Cholesky frame of `H`.
pub fn moment_map(basis: &SectionBasis, h: &HermitianInnerProduct, omega: &DensityField) -> Result<MomentMapValue> {
    let chol = h.frame()?;
    Ok(moment_map_in_frame(basis, &chol.l_inv, omega))
}

/// `H_A(p) = tr(A μ(p))` in the Cholesky frame of `H`.
pub fn matrix_potential(basis: &SectionBasis, h: &HermitianInnerProduct, a: &HermitianMatrix) -> Result<DensityField> {
    let chol = h.frame()?;
    let mut out = alloc::vec![0.0; basis.nodes()];
    for_each_frame_value(basis, &chol.l_inv, |p, v, _| {
        out[p] = a.quadratic_form(v) / norm_sqr(v);
    });
    Ok(DensityField::generic(out))
}

/// `⟨F, G⟩_{L²(Ω)}`.
pub fn l2_omega(basis: &SectionBasis, omega: &DensityField, f: &DensityField, g: &DensityField) -> f64 {
    (0..basis.nodes())
        .map(|p| basis.weights()[p] * omega.values()[p] * f.values()[p] * g.values()[p])
        .sum()
}

#[derive(Debug, Clone)]
pub struct MomentDerivative {
    /// Richardson extrapolation of the central differences at `ε` and `ε/2`.
    pub value: HermitianMatrix,
    /// HS distance between the extrapolated value and the `ε/2` difference.
    pub richardson_gap: f64,
}

pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e-4;

/// `dμ_Ω(A)` at `H` by central differences along the geodesic, in the
/// frame transported with the geodesic (`C(t) = e^{tA/2} C`).
pub fn moment_map_derivative(
    basis: &SectionBasis,
    h: &HermitianInnerProduct,
    omega: &DensityField,
    a: &HermitianMatrix,
    eps: f64,
) -> Result<MomentDerivative> {
    if !(1e-6..=1e-2).contains(&eps) {
        return Err(Error::InvalidArgument(alloc::format!("finite-difference step {eps:e} outside [1e-6, 1e-2]")));
    }
    let chol = h.frame()?;
    let central = |e: f64| {
        let plus = a.scale(0.5 * e).expm().0 * &chol.l_inv;
        let minus = a.scale(-0.5 * e).expm().0 * &chol.l_inv;
        let mp = moment_map_in_frame(basis, &plus, omega).mu;
        let mm = moment_map_in_frame(basis, &minus, omega).mu;
        (&mp - &mm).scale(0.5 / e)
    };
    let coarse = central(eps);
    let fine = central(0.5 * eps);
    let value = (&fine.scale(4.0) - &coarse).scale(1.0 / 3.0);
    let richardson_gap = (&value - &fine).hs_norm();
    Ok(MomentDerivative { value, richardson_gap })
}

/// `H(1) = L e^{−A} L*` for `H = L L*`: the time-one point of the geodesic
/// with velocity `A`.
pub fn geodesic_endpoint(h: &HermitianInnerProduct, a: &HermitianMatrix) -> Result<HermitianInnerProduct> {
    let chol = h.frame()?;
    let m = a.scale(-1.0).expm().congruence(&chol.l);
    HermitianInnerProduct::new(h.k(), m)
}

/// `(tr (H0 − H1)²)^{1/2} / k`.
pub fn dist_flat(h0: &HermitianInnerProduct, h1: &HermitianInnerProduct, k: usize) -> f64 {
    (h0.matrix() - h1.matrix()).hs_norm() / k as f64
}

/// Relative logarithm `log(L0⁻¹ H1 L0⁻*)` of two inner products.
pub fn relative_log(h0: &HermitianInnerProduct, h1: &HermitianInnerProduct) -> Result<HermitianMatrix> {
    let chol = h0.frame()?;
    h1.matrix().congruence(&chol.l_inv).logm()
}

/// Riemannian distance `‖log(H0^{-1/2} H1 H0^{-1/2})‖_HS / k`.
pub fn dist_geodesic(h0: &HermitianInnerProduct, h1: &HermitianInnerProduct, k: usize) -> Result<f64> {
    Ok(relative_log(h0, h1)?.hs_norm() / k as f64)
}

/// [`dist_geodesic`] with the scale direction removed: the distance between
/// the rays through `H0` and `H1`.
pub fn dist_geodesic_projective(h0: &HermitianInnerProduct, h1: &HermitianInnerProduct, k: usize) -> Result<f64> {
    Ok(relative_log(h0, h1)?.trace_free().hs_norm() / k as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct OpnormGrowthReport {
    pub mu_op_0: f64,
    pub mu_op_1: f64,
    /// `‖A‖_HS` of the geodesic joining the two points.
    pub distance: f64,
    /// `e^{2‖A‖} ‖μ_Ω(H0)‖_op − ‖μ_Ω(H1)‖_op`.
    pub slack: f64,
}

/// Compares `‖μ_Ω(H1)‖_op` with `e^{2‖A‖}‖μ_Ω(H0)‖_op`, `A` the geodesic
/// velocity from `H0` to `H1` (unscaled by `k`).
pub fn opnorm_growth_check(
    h0: &HermitianInnerProduct,
    h1: &HermitianInnerProduct,
    basis: &SectionBasis,
    omega: &DensityField,
) -> Result<OpnormGrowthReport> {
    let mu_op_0 = moment_map(basis, h0, omega)?.mu_op;
    let mu_op_1 = moment_map(basis, h1, omega)?.mu_op;
    let distance = relative_log(h0, h1)?.hs_norm();
    Ok(OpnormGrowthReport { mu_op_0, mu_op_1, distance, slack: math::exp(2.0 * distance) * mu_op_0 - mu_op_1 })
}

/// `tr(B dμ_Ω(A)) + ⟨H_A, H_B⟩_{L²(Ω)} − Re tr(A B μ_Ω)`.
pub fn derivative_identity_residual(
    basis: &SectionBasis,
    h: &HermitianInnerProduct,
    omega: &DensityField,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    eps: f64,
) -> Result<f64> {
    let d = moment_map_derivative(basis, h, omega, a, eps)?.value;
    let mu = moment_map(basis, h, omega)?.mu;
    let ha = matrix_potential(basis, h, a)?;
    let hb = matrix_potential(basis, h, b)?;
    let ab = HermitianMatrix(a * b);
    let lhs = b.trace_product(&d).re + l2_omega(basis, omega, &ha, &hb);
    Ok(lhs - ab.trace_product(&mu).re)
}

/// `2‖A‖_HS ‖μ_Ω‖_op − ‖dμ_Ω(A)‖_HS`.
pub fn derivative_bound_slack(
    basis: &SectionBasis,
    h: &HermitianInnerProduct,
    omega: &DensityField,
    a: &HermitianMatrix,
    eps: f64,
) -> Result<f64> {
    let d = moment_map_derivative(basis, h, omega, a, eps)?.value;
    let mu_op = moment_map(basis, h, omega)?.mu_op;
    Ok(2.0 * a.hs_norm() * mu_op - d.hs_norm())
}

/// `‖A‖²_HS ‖μ_Ω‖_op − ‖H_A‖²_{L²(Ω)}`.
pub fn potential_bound_slack(
    basis: &SectionBasis,
    h: &HermitianInnerProduct,
    omega: &DensityField,
    a: &HermitianMatrix,
) -> Result<f64> {
    let ha = matrix_potential(basis, h, a)?;
    let mu_op = moment_map(basis, h, omega)?.mu_op;
    let n = a.hs_norm();
    Ok(n * n * mu_op - l2_omega(basis, omega, &ha, &ha))
}

/// Eigenvalues of `μ_Ω`, ascending.
pub fn spectrum(mu: &MomentMapValue) -> Vec<f64> {
    mu.mu.eigenvalues()
}
