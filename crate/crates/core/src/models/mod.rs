//! Concrete band structures used as batteries.

pub mod dirac;
pub mod haldane;
pub mod ising;

use serde::Serialize;
use thiserror::Error;

use crate::kernel::KernelError;
use crate::quadrature::QuadratureError;

pub use dirac::{dirac_d, DiracParams};
pub use haldane::{
    chern_numeric, chern_sign, critical_t2, haldane_d, haldane_dirac_points, haldane_masses, HaldaneParams,
    HaldaneTable, Phase,
};
pub use ising::{ising_dispersion, ising_energy, ising_energy_with, IsingParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unsupported dimension {0}; expected 1 or 2")]
    UnsupportedDimension(u32),
    #[error("momentum has {got} components, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),
    #[error("lattice constant must be positive, got {0}")]
    NonPositiveLatticeConstant(f64),
    #[error("Dirac mass vanishes: parameters sit on a phase boundary")]
    Critical,
    #[error("grid of {n} points per side is below the minimum {min}")]
    GridTooSmall { n: usize, min: usize },
    #[error("gap {gap:e} on the plaquette mesh is below {threshold:e}")]
    GapTooSmall { gap: f64, threshold: f64 },
    #[error("pre-quench and evolution parameters {0}")]
    QuenchMismatch(&'static str),
    #[error(transparent)]
    Grid(#[from] QuadratureError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Parameters of one member of a model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Dirac(DiracParams),
    Ising(IsingParams),
    Haldane(HaldaneParams),
}

/// Double-quench charging protocol: prepare in the ground state of `pre`,
/// evolve under `during` for `tau` (long-time mode when `None`), switch back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuenchSpec {
    pre: ModelParams,
    during: ModelParams,
    tau: Option<f64>,
}

impl QuenchSpec {
    /// Checks that both parameter sets belong to one family and differ only
    /// in the quenched coupling (mass, field or `t₂`).
    pub fn new(pre: ModelParams, during: ModelParams, tau: Option<f64>) -> Result<Self, ModelError> {
        if let Some(t) = tau {
            if !t.is_finite() || t < 0.0 {
                return Err(ModelError::Kernel(KernelError::InvalidTau(t)));
            }
        }
        match (&pre, &during) {
            (ModelParams::Dirac(a), ModelParams::Dirac(b)) => {
                if a.dim() != b.dim() {
                    return Err(ModelError::QuenchMismatch("differ in dimension"));
                }
            }
            (ModelParams::Ising(_), ModelParams::Ising(_)) => {}
            (ModelParams::Haldane(a), ModelParams::Haldane(b)) => {
                if a.t1 != b.t1 || a.m != b.m || a.a() != b.a() {
                    return Err(ModelError::QuenchMismatch("differ in more than t2"));
                }
            }
            _ => return Err(ModelError::QuenchMismatch("belong to different families")),
        }
        Ok(Self { pre, during, tau })
    }

    /// Dirac mass quench `m_A → m_A + δ`.
    pub fn dirac(dim: u32, m_a: f64, delta: f64) -> Result<Self, ModelError> {
        Self::new(
            ModelParams::Dirac(DiracParams::new(dim, m_a)?),
            ModelParams::Dirac(DiracParams::new(dim, m_a + delta)?),
            None,
        )
    }

    /// Field quench `h₀ → h₀ + h₁`.
    pub fn ising(h0: f64, h1: f64) -> Result<Self, ModelError> {
        Self::new(ModelParams::Ising(IsingParams::new(h0)?), ModelParams::Ising(IsingParams::new(h0 + h1)?), None)
    }

    /// Next-nearest-neighbour quench `t₂ → t₂ + δ`.
    pub fn haldane(base: HaldaneParams, delta: f64, tau: Option<f64>) -> Result<Self, ModelError> {
        let during = base.with_t2(base.t2 + delta);
        if !during.t2.is_finite() {
            return Err(ModelError::NonFinite("t2"));
        }
        Self::new(ModelParams::Haldane(base), ModelParams::Haldane(during), tau)
    }

    pub fn pre(&self) -> &ModelParams {
        &self.pre
    }

    pub fn during(&self) -> &ModelParams {
        &self.during
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    /// Size of the quench in the scanned coupling.
    pub fn increment(&self) -> f64 {
        match (&self.pre, &self.during) {
            (ModelParams::Dirac(a), ModelParams::Dirac(b)) => b.mass - a.mass,
            (ModelParams::Ising(a), ModelParams::Ising(b)) => b.h - a.h,
            (ModelParams::Haldane(a), ModelParams::Haldane(b)) => b.t2 - a.t2,
            _ => unreachable!("validated in QuenchSpec::new"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quench_spec_validation() {
        let q = QuenchSpec::dirac(1, -2.0, 2.0).unwrap();
        assert_eq!(q.increment(), 2.0);
        let h = HaldaneParams::new(1.0, 0.0, 1.0).unwrap();
        assert!(QuenchSpec::haldane(h, 0.1, Some(5.0)).is_ok());
        let mixed = QuenchSpec::new(ModelParams::Ising(IsingParams::new(0.5).unwrap()), ModelParams::Haldane(h), None);
        assert!(matches!(mixed, Err(ModelError::QuenchMismatch(_))));
        let other_t1 = HaldaneParams::new(2.0, 0.1, 1.0).unwrap();
        assert!(QuenchSpec::new(ModelParams::Haldane(h), ModelParams::Haldane(other_t1), None).is_err());
        assert!(QuenchSpec::new(
            ModelParams::Dirac(DiracParams::new(1, 1.0).unwrap()),
            ModelParams::Dirac(DiracParams::new(2, 1.0).unwrap()),
            None
        )
        .is_err());
        assert!(QuenchSpec::haldane(h, 0.1, Some(-1.0)).is_err());
    }
}
