use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a volume density.
pub const MASS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    /// `f = Ω/ω_ref`, strictly positive with unit mass.
    VolumeDensity,
    Potential,
    /// `u = ω_φ/ω_ref`.
    MaDensity,
    Generic,
}

/// A real scalar per quadrature node, tagged with its meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    values: Vec<f64>,
    role: FieldRole,
}

impl DensityField {
    pub fn new(values: Vec<f64>, role: FieldRole) -> Self {
        Self { values, role }
    }

    pub fn potential(values: Vec<f64>) -> Self {
        Self::new(values, FieldRole::Potential)
    }

    pub fn generic(values: Vec<f64>) -> Self {
        Self::new(values, FieldRole::Generic)
    }

    pub fn zeros(len: usize, role: FieldRole) -> Self {
        Self::new(alloc::vec![0.0; len], role)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn with_role(self, role: FieldRole) -> Self {
        Self { values: self.values, role }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup(&self) -> f64 {
        crate::math::max(&self.values)
    }

    pub fn inf(&self) -> f64 {
        crate::math::min(&self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        crate::math::max_abs(&self.values)
    }

    /// Sup-distance to another field on the same grid.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.values.iter().map(|&v| f(v)).collect(), self.role)
    }

    /// First node whose value is not strictly positive (NaN included).
    pub fn first_nonpositive(&self) -> Option<(usize, f64)> {
        self.values.iter().copied().enumerate().find(|&(_, v)| !(v > 0.0))
    }

    /// Nodes whose value is not strictly positive.
    pub fn nonpositive_nodes(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, &v)| !(v > 0.0)).map(|(i, _)| i).collect()
    }

    pub(crate) fn check_volume_density(&self, mass: f64) -> Result<()> {
        if let Some((node, value)) = self.first_nonpositive() {
            return Err(Error::InvalidDensity(alloc::format!(
                "value {value:e} at node {node} is not positive"
            )));
        }
        if !((mass - 1.0).abs() <= MASS_TOLERANCE) {
            return Err(Error::InvalidDensity(alloc::format!("total mass {mass} differs from 1")));
        }
        Ok(())
    }
}
