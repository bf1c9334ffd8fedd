//! Model surfaces: the round `CP¹` and the flat torus `ℝ²/2πℤ²`, both with
//! unit total area.
//!
//! Both Laplacians are spectral and share one normalization, chosen so that
//! `ω_φ = ω_ref (1 + ½ Δφ)`. On the torus `Δ = ∂²_x + ∂²_y`; on the sphere
//! `Δ = Δ_LB / 2π` for the area-1 round metric, giving `ΔY_ℓ = −2ℓ(ℓ+1) Y_ℓ`.

mod field;
mod sections;
mod sphere;
mod torus;

use alloc::vec::Vec;

pub use field::{DensityField, FieldRole, MASS_TOLERANCE};
pub use sections::{SectionBasis, MAX_K};
pub use sphere::{sphere_eigenvalue, SphereGrid};
pub use torus::TorusGrid;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Sphere,
    Torus,
}

/// A quadrature grid with weights for `ω_ref` (summing to 1) and a Laplacian.
#[derive(Debug, Clone)]
pub enum Geometry {
    Sphere(SphereGrid),
    Torus(TorusGrid),
}

impl Geometry {
    /// Gauss–Legendre nodes in `cos θ` crossed with `n_phi` equispaced
    /// azimuths.
    pub fn sphere(n_theta: usize, n_phi: usize) -> Result<Self> {
        SphereGrid::new(n_theta, n_phi).map(Self::Sphere)
    }

    pub fn torus(n_x: usize, n_y: usize) -> Result<Self> {
        TorusGrid::new(n_x, n_y).map(Self::Torus)
    }

    pub fn kind(&self) -> GeometryKind {
        match self {
            Self::Sphere(_) => GeometryKind::Sphere,
            Self::Torus(_) => GeometryKind::Torus,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Sphere(g) => g.len(),
            Self::Torus(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Self::Sphere(g) => g.weights(),
            Self::Torus(g) => g.weights(),
        }
    }

    /// Node coordinates: `(cos θ, φ)` on the sphere, `(x, y)` on the torus.
    pub fn point(&self, p: usize) -> (f64, f64) {
        match self {
            Self::Sphere(g) => g.point(p),
            Self::Torus(g) => g.point(p),
        }
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|p| {
                let (a, b) = self.point(p);
                f(a, b)
            })
            .collect()
    }

    /// `∫ f ω_ref`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `∫ f g ω_ref`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights().iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    /// The ω_ref-mean; equal to the integral since the area is 1.
    pub fn mean(&self, f: &[f64]) -> f64 {
        self.integrate(f)
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Self::Sphere(g) => g.apply_multiplier(f, |l| -sphere_eigenvalue(l)),
            Self::Torus(g) => g.apply_multiplier(f, |p, q| -(p * p + q * q)),
        }
    }

    /// Mean-free solution `g` of `Δg = f − mean(f)`.
    pub fn inverse_laplacian(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Self::Sphere(g) => g.apply_multiplier(f, |l| if l == 0 { 0.0 } else { -1.0 / sphere_eigenvalue(l) }),
            Self::Torus(g) => g.apply_multiplier(f, |p, q| {
                let s = p * p + q * q;
                if s == 0.0 {
                    0.0
                } else {
                    -1.0 / s
                }
            }),
        }
    }

    /// Applies `m(λ)` spectrally, `λ ≥ 0` being the eigenvalue of `−Δ`.
    pub fn spectral_multiplier(&self, f: &[f64], m: impl Fn(f64) -> f64) -> Vec<f64> {
        match self {
            Self::Sphere(g) => g.apply_multiplier(f, |l| m(sphere_eigenvalue(l))),
            Self::Torus(g) => g.apply_multiplier(f, |p, q| m(p * p + q * q)),
        }
    }

    /// `−∫ f Δf ω_ref`, evaluated from spectral coefficients.
    pub fn dirichlet_energy(&self, f: &[f64]) -> f64 {
        match self {
            Self::Sphere(g) => {
                let coeffs = g.analyze(f);
                let mut acc = 0.0;
                for (m, row) in coeffs.iter().enumerate() {
                    let mult = if m == 0 { 1.0 } else { 2.0 };
                    for (idx, c) in row.iter().enumerate() {
                        acc += mult * sphere_eigenvalue(m + idx) * c.norm_sqr();
                    }
                }
                0.5 * acc
            }
            Self::Torus(g) => g.dirichlet_energy(f),
        }
    }

    /// Largest eigenvalue of `−Δ` representable on the grid.
    pub fn spectral_radius(&self) -> f64 {
        match self {
            Self::Sphere(g) => g.spectral_radius(),
            Self::Torus(g) => g.spectral_radius(),
        }
    }

    pub fn as_sphere(&self) -> Option<&SphereGrid> {
        match self {
            Self::Sphere(g) => Some(g),
            Self::Torus(_) => None,
        }
    }

    /// Section basis of `H⁰(O(k))`; only the sphere carries one.
    pub fn section_basis(&self, k: usize) -> Result<SectionBasis> {
        match self {
            Self::Sphere(g) => SectionBasis::new(g, k),
            Self::Torus(_) => Err(Error::Unsupported("holomorphic sections on the torus backend".into())),
        }
    }

    /// Validates a volume density: positive with unit mass.
    pub fn volume_density(&self, values: Vec<f64>) -> Result<DensityField> {
        self.check_len(values.len())?;
        let field = DensityField::new(values, FieldRole::VolumeDensity);
        field.check_volume_density(self.integrate(field.values()))?;
        Ok(field)
    }

    /// Rescales positive values to unit mass.
    pub fn normalized_volume_density(&self, values: Vec<f64>) -> Result<DensityField> {
        self.check_len(values.len())?;
        if let Some((node, value)) = DensityField::generic(values.clone()).first_nonpositive() {
            return Err(Error::InvalidDensity(alloc::format!(
                "value {value:e} at node {node} is not positive"
            )));
        }
        let mass = self.integrate(&values);
        self.volume_density(values.into_iter().map(|v| v / mass).collect())
    }

    /// `ω_ref` itself.
    pub fn reference_density(&self) -> DensityField {
        DensityField::new(alloc::vec![1.0; self.len()], FieldRole::VolumeDensity)
    }

    /// `u = ω_φ/ω_ref = 1 + ½ Δφ`. Values `u ≤ 0` are kept, not clamped; see
    /// [`Self::ma_density_checked`] and [`DensityField::nonpositive_nodes`].
    pub fn ma_density(&self, phi: &[f64]) -> DensityField {
        let lap = self.laplacian(phi);
        DensityField::new(lap.into_iter().map(|l| 1.0 + 0.5 * l).collect(), FieldRole::MaDensity)
    }

    /// [`Self::ma_density`], failing on the first node where positivity is lost.
    pub fn ma_density_checked(&self, phi: &[f64], t: f64) -> Result<DensityField> {
        let u = self.ma_density(phi);
        match u.first_nonpositive() {
            Some((node, value)) => Err(Error::PositivityLost { node, t, value }),
            None => Ok(u),
        }
    }

    /// Subtracts the ω_ref-mean.
    pub fn v_normalize(&self, phi: &[f64]) -> DensityField {
        let m = self.mean(phi);
        DensityField::potential(phi.iter().map(|v| v - m).collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "field has {len} values, grid has {} nodes",
                self.len()
            )));
        }
        Ok(())
    }
}
