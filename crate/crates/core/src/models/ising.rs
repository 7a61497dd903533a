//! Transverse-field Ising chain after Jordan–Wigner and Bogoliubov.
//!
//! The long-time stored energy of the `h₀ → h₀ + h₁ → h₀` protocol is
//!
//! ```text
//! ΔE = h₁² Σ_k sin²k / (2 ε(k) ω(k)²)
//! ε(k) = √((h₀ − cos k)² + sin²k),  ω(k) = √((h₀ + h₁ − cos k)² + sin²k)
//! ```
//!
//! evaluated directly rather than through the generic kernel; the generic
//! kernel applied to `d = (0, sin k, h − cos k)` is twice this value.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::kernel::{EnergyConvention, EnergyTally};
use crate::quadrature::{reduce_grid, BzGrid, GridSample, Parallelism};

/// Modes whose dispersion falls below this are dropped as critical.
pub const CRITICAL_DISPERSION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub h: f64,
}

impl IsingParams {
    pub fn new(h: f64) -> Result<Self, ModelError> {
        if h.is_finite() {
            Ok(Self { h })
        } else {
            Err(ModelError::NonFinite("h"))
        }
    }
}

pub fn ising_dispersion(h: f64, k: f64) -> f64 {
    let (s, c) = k.sin_cos();
    ((h - c) * (h - c) + s * s).sqrt()
}

/// Per-mode summand `h₁² sin²k / (2 ε ω²)`, or `None` for a critical mode.
pub fn ising_summand(h0: f64, h1: f64, k: f64) -> Option<f64> {
    let eps = ising_dispersion(h0, k);
    let omega = ising_dispersion(h0 + h1, k);
    if eps <= CRITICAL_DISPERSION || omega <= CRITICAL_DISPERSION {
        return None;
    }
    let s = k.sin();
    Some(h1 * h1 * s * s / (2.0 * eps * omega * omega))
}

/// Long-time stored energy on `n_k` momenta `k_j = −π + (j + ½)·2π/n_k`.
pub fn ising_energy_with(
    h0: f64,
    h1: f64,
    n_k: usize,
    convention: EnergyConvention,
    parallelism: Parallelism,
) -> Result<EnergyTally, ModelError> {
    if !h0.is_finite() {
        return Err(ModelError::NonFinite("h0"));
    }
    if !h1.is_finite() {
        return Err(ModelError::NonFinite("h1"));
    }
    let grid = BzGrid::line(n_k)?;
    if h1 == 0.0 {
        return Ok(EnergyTally { energy: 0.0, dropped_modes: 0, points: n_k });
    }
    let reduced = reduce_grid(&grid, parallelism, |k| {
        Ok::<_, ModelError>(match ising_summand(h0, h1, k[0]) {
            Some(v) => GridSample::Value(v),
            None => GridSample::Dropped,
        })
    })?;
    Ok(EnergyTally { energy: reduced.normalized(convention), dropped_modes: reduced.dropped, points: n_k })
}

/// Per-mode long-time stored energy.
pub fn ising_energy(h0: f64, h1: f64, n_k: usize) -> Result<EnergyTally, ModelError> {
    ising_energy_with(h0, h1, n_k, EnergyConvention::PerMode, Parallelism::Parallel)
}
