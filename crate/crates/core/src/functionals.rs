//! Aubin's functionals and `F⁰_Ω` at complex dimension one.
//!
//! With `ω_φ = ω_ref(1 + ½Δφ)`, `I(φ) = ∫ φ(1 − u_φ) = −½∫ φΔφ` and
//! `J = I/2`. `I` is evaluated pointwise from the Monge–Ampère density and
//! `J` from the spectral Dirichlet energy, so `I = 2J` is a genuine check of
//! the two code paths.

use crate::error::Result;
use crate::geometry::{DensityField, Geometry};

/// `I(ω_ref, ω_φ) = ∫ φ (ω_ref − ω_φ)`.
pub fn aubin_i(geom: &Geometry, phi: &[f64]) -> Result<f64> {
    let u = geom.ma_density_checked(phi, f64::NAN)?;
    Ok(phi.iter().zip(u.values()).zip(geom.weights()).map(|((p, u), w)| w * p * (1.0 - u)).sum())
}

/// `J(ω_ref, ω_φ) = ∫₀¹ I(ω_ref, ω_{sφ}) ds/s`, which at dimension one is a
/// quarter of the Dirichlet energy `−∫ φΔφ`.
pub fn aubin_j(geom: &Geometry, phi: &[f64]) -> Result<f64> {
    geom.ma_density_checked(phi, f64::NAN)?;
    Ok(0.25 * geom.dirichlet_energy(phi))
}

/// `F⁰_Ω(ω_ref, ω_φ) = J(φ) + ∫ φ (Ω − ω_ref)`; `f = Ω/ω_ref`.
pub fn f0_omega(geom: &Geometry, f: &DensityField, phi: &[f64]) -> Result<f64> {
    let j = aubin_j(geom, phi)?;
    Ok(j + phi.iter().zip(f.values()).zip(geom.weights()).map(|((p, f), w)| w * p * (f - 1.0)).sum::<f64>())
}

/// `F⁰_Ω(ω_{φ₂}, ω_{φ₁})` with `ω_{φ₂}` as reference form: `J` of the
/// relative potential plus `∫ (φ₁ − φ₂)(Ω − ω_{φ₂})`.
///
/// At dimension one `J` depends only on the relative potential.
pub fn f0_omega_relative(geom: &Geometry, f: &DensityField, phi1: &[f64], phi2: &[f64]) -> Result<f64> {
    let u2 = geom.ma_density_checked(phi2, f64::NAN)?;
    geom.ma_density_checked(phi1, f64::NAN)?;
    let psi: alloc::vec::Vec<f64> = phi1.iter().zip(phi2).map(|(a, b)| a - b).collect();
    let j = 0.25 * geom.dirichlet_energy(&psi);
    let lin: f64 = psi
        .iter()
        .zip(f.values())
        .zip(u2.values())
        .zip(geom.weights())
        .map(|(((p, f), u), w)| w * p * (f - u))
        .sum();
    Ok(j + lin)
}

/// `|F⁰(ω, ω_{φ₁}) − F⁰(ω, ω_{φ₂}) − F⁰(ω_{φ₂}, ω_{φ₁})|`.
pub fn cocycle_check(geom: &Geometry, f: &DensityField, phi1: &[f64], phi2: &[f64]) -> Result<f64> {
    let lhs = f0_omega(geom, f, phi1)?;
    let rhs = f0_omega(geom, f, phi2)? + f0_omega_relative(geom, f, phi1, phi2)?;
    Ok((lhs - rhs).abs())
}

/// Second divided differences `2[t₀,t₁,t₂]F` of samples at increasing,
/// possibly uneven, times.
pub fn second_differences(ts: &[f64], values: &[f64]) -> alloc::vec::Vec<f64> {
    (2..ts.len().min(values.len()))
        .map(|i| {
            let (t0, t1, t2) = (ts[i - 2], ts[i - 1], ts[i]);
            let d1 = (values[i - 1] - values[i - 2]) / (t1 - t0);
            let d2 = (values[i] - values[i - 1]) / (t2 - t1);
            2.0 * (d2 - d1) / (t2 - t0)
        })
        .collect()
}
