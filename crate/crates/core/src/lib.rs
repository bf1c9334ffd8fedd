//! Finite-dimensional quantization of the prescribed-volume-form problem on
//! model Riemann surfaces.
//!
//! The crate computes Ω-balanced metrics on `CP¹` (by the `T_k = FS ∘ Hilb_Ω`
//! iteration and by the rescaled balancing flow on the Bergman space of
//! `H⁰(O(k))`), evolves the Ω-Kähler flow `∂φ/∂t = 1 − Ω/ω_φ` on the sphere
//! and on the flat torus, and exposes the diagnostics that tie the two
//! together: Bergman densities, the Berezin operator `Q_k`, moment-map
//! identities and the Aubin functionals.
//!
//! Conventions used everywhere:
//!
//! * total volume is 1 (`∫ ω_ref = ∫ Ω = 1`);
//! * at complex dimension one `ω_φ = ω_ref (1 + ½ Δφ)`, with `Δ` the negative
//!   semidefinite Laplacian of [`geometry::Geometry`];
//! * a fibrewise metric on `O(k)` is `h_ref^k e^{-kψ}` and its Kähler form is
//!   `ω_ψ`, so a Bergman metric and a PDE potential live on the same scale;
//! * a volume form is stored as its density `f = Ω/ω_ref`.
//!
//! The crate is `no_std` and only needs `alloc`; IO, configuration and the
//! command line live in the `balflow` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod balancing;
pub mod error;
pub mod fft;
pub mod fit;
pub mod functionals;
pub mod geometry;
pub mod kahler_flow;
pub mod linalg;
pub mod math;
pub mod moment;
pub mod quadrature;
pub mod quantization;
pub mod trace;

pub use error::{Error, Result};
pub use geometry::{DensityField, FieldRole, Geometry, GeometryKind, SectionBasis};
pub use linalg::HermitianMatrix;
pub use quantization::{FibrewiseMetric, HermitianInnerProduct};
pub use trace::{FlowTrace, TraceSink};
