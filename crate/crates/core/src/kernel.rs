//! Per-momentum stored-energy kernel of the double-quench protocol.
//!
//! A two-band Bloch Hamiltonian `d(k)·σ` is prepared in its ground state
//! for the pre-quench vector `dA`, evolved with `dB` for a time `τ` and
//! measured again with `dA`. The energy left in one momentum mode is
//!
//! ```text
//! ΔE_k(τ) = (1 − cos 2ωτ) · F₀ / (ω² ε),   ε = |dA|, ω = |dB|
//! ```
//!
//! and in the long-time mode the oscillating factor is replaced by its
//! mean, 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{reduce_grid, BzGrid, GridSample, Momentum, Parallelism};

/// Below this ratio `(dB1² + dB2²)/ω²` the in-plane direction of `dB`
/// is treated as exactly vanishing.
pub const NEAR_DEGENERATE_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KernelError {
    #[error("non-finite d-vector component ({0}, {1}, {2})")]
    NonFinite(f64, f64, f64),
    #[error("degenerate mode: evolution dispersion vanishes")]
    DegenerateEvolution,
    #[error("degenerate mode: pre-quench dispersion vanishes")]
    DegeneratePrequench,
    #[error("charging time must be finite and non-negative, got {0}")]
    InvalidTau(f64),
}

/// Bloch vector `(d1, d2, d3)` of a two-band Hamiltonian at one momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DVector {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl DVector {
    /// Builds a vector, rejecting NaN and infinities.
    pub fn new(d1: f64, d2: f64, d3: f64) -> Result<Self, KernelError> {
        let d = Self { d1, d2, d3 };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(KernelError::NonFinite(d1, d2, d3))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.d1.is_finite() && self.d2.is_finite() && self.d3.is_finite()
    }

    fn in_plane_sq(&self) -> f64 {
        self.d1 * self.d1 + self.d2 * self.d2
    }

    fn norm_sq(&self) -> f64 {
        self.in_plane_sq() + self.d3 * self.d3
    }
}

/// Single-particle dispersion `|d|`.
pub fn dispersion(d: &DVector) -> f64 {
    d.norm_sq().sqrt()
}

/// The `F₀` factor of the stored-energy kernel.
///
/// Evaluated as `(ω² c² + (dA3 ρ² − dB3 s)²) / ρ²` with
/// `ρ² = dB1² + dB2²`, `c = dA1 dB2 − dA2 dB1` and `s = dA1 dB1 + dA2 dB2`,
/// which is the two-addend expression multiplied through by `ρ²`. When the
/// in-plane part of `dB` vanishes (or falls below [`NEAR_DEGENERATE_RATIO`]
/// relative to `ω²`) the finite limit `dB3² (dA1² + dA2²)` is returned.
pub fn f0(a: &DVector, b: &DVector) -> Result<f64, KernelError> {
    if !a.is_finite() {
        return Err(KernelError::NonFinite(a.d1, a.d2, a.d3));
    }
    if !b.is_finite() {
        return Err(KernelError::NonFinite(b.d1, b.d2, b.d3));
    }
    let rho_sq = b.in_plane_sq();
    let omega_sq = rho_sq + b.d3 * b.d3;
    if omega_sq == 0.0 {
        return Err(KernelError::DegenerateEvolution);
    }
    if rho_sq < NEAR_DEGENERATE_RATIO * omega_sq {
        return Ok(b.d3 * b.d3 * a.in_plane_sq());
    }
    let cross = a.d1 * b.d2 - a.d2 * b.d1;
    let dot = a.d1 * b.d1 + a.d2 * b.d2;
    let second = a.d3 * rho_sq - b.d3 * dot;
    Ok((omega_sq * cross * cross + second * second) / rho_sq)
}

/// Energy stored in one momentum mode; always non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct ModeEnergy(f64);

impl ModeEnergy {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Stored energy of one mode. `tau = None` selects the long-time mode.
pub fn mode_energy(a: &DVector, b: &DVector, tau: Option<f64>) -> Result<ModeEnergy, KernelError> {
    if let Some(t) = tau {
        if !t.is_finite() || t < 0.0 {
            return Err(KernelError::InvalidTau(t));
        }
    }
    let eps = dispersion(a);
    if eps == 0.0 {
        return Err(KernelError::DegeneratePrequench);
    }
    let omega_sq = b.norm_sq();
    if omega_sq == 0.0 {
        return Err(KernelError::DegenerateEvolution);
    }
    let long_time = f0(a, b)? / (omega_sq * eps);
    let value = match tau {
        None => long_time,
        Some(t) => (1.0 - (2.0 * omega_sq.sqrt() * t).cos()) * long_time,
    };
    Ok(ModeEnergy(value))
}

/// Normalization of a Brillouin-zone sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyConvention {
    RawSum,
    /// Divide by the number of grid points.
    #[default]
    PerMode,
}

/// Momentum-resolved two-band Hamiltonian.
pub trait BandMap: Sync {
    fn d_vector(&self, k: Momentum) -> DVector;
}

impl<F> BandMap for F
where
    F: Fn(Momentum) -> DVector + Sync,
{
    fn d_vector(&self, k: Momentum) -> DVector {
        self(k)
    }
}

/// Aggregated stored energy with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTally {
    pub energy: f64,
    /// Modes with a vanishing dispersion, left out of the sum.
    pub dropped_modes: usize,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TotalEnergyError {
    #[error("band map returned a non-finite d-vector at k = ({}, {})", .k[0], .k[1])]
    NonFiniteBand { k: Momentum },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Stored energy summed over a grid.
///
/// Critical modes (`ε = 0` or `ω = 0`) contribute nothing and are counted in
/// [`EnergyTally::dropped_modes`]. The reduction order is fixed by the grid,
/// so serial and parallel evaluation give identical bits.
pub fn total_energy<A, B>(
    band_a: &A,
    band_b: &B,
    grid: &BzGrid,
    tau: Option<f64>,
    convention: EnergyConvention,
    parallelism: Parallelism,
) -> Result<EnergyTally, TotalEnergyError>
where
    A: BandMap + ?Sized,
    B: BandMap + ?Sized,
{
    if let Some(t) = tau {
        if !t.is_finite() || t < 0.0 {
            return Err(KernelError::InvalidTau(t).into());
        }
    }
    let reduced = reduce_grid(grid, parallelism, |k| {
        let a = band_a.d_vector(k);
        let b = band_b.d_vector(k);
        if !a.is_finite() || !b.is_finite() {
            return Err(TotalEnergyError::NonFiniteBand { k });
        }
        match mode_energy(&a, &b, tau) {
            Ok(e) => Ok(GridSample::Value(e.value())),
            Err(KernelError::DegenerateEvolution | KernelError::DegeneratePrequench) => Ok(GridSample::Dropped),
            Err(e) => Err(e.into()),
        }
    })?;
    Ok(EnergyTally { energy: reduced.normalized(convention), dropped_modes: reduced.dropped, points: reduced.points })
}
