//! Low-energy Dirac cones in one and two dimensions.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::kernel::{BandMap, DVector};
use crate::quadrature::Momentum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracParams {
    dim: u32,
    pub mass: f64,
}

impl DiracParams {
    pub fn new(dim: u32, mass: f64) -> Result<Self, ModelError> {
        if dim != 1 && dim != 2 {
            return Err(ModelError::UnsupportedDimension(dim));
        }
        if !mass.is_finite() {
            return Err(ModelError::NonFinite("mass"));
        }
        Ok(Self { dim, mass })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }
}

/// `d = (k_x, 0, m)` in 1D and `(k_x, k_y, m)` in 2D.
pub fn dirac_d(k: &[f64], p: &DiracParams) -> Result<DVector, ModelError> {
    if k.len() != p.dim as usize {
        return Err(ModelError::DimensionMismatch { expected: p.dim as usize, got: k.len() });
    }
    let ky = if p.dim == 2 { k[1] } else { 0.0 };
    DVector::new(k[0], ky, p.mass).map_err(|_| ModelError::NonFinite("momentum"))
}

impl BandMap for DiracParams {
    fn d_vector(&self, k: Momentum) -> DVector {
        let ky = if self.dim == 2 { k[1] } else { 0.0 };
        DVector { d1: k[0], d2: ky, d3: self.mass }
    }
}
