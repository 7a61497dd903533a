//! Haldane model on the honeycomb lattice at flux phase φ = π/2.
//!
//! Primitive vectors `a₁ = a(1, 0)`, `a₂ = a(½, √3/2)`; the B site sits at
//! `δ_B = a(½, 1/(2√3))`. The Bloch vector is
//!
//! ```text
//! d₁ =  t₁ [cos k·δ_B + cos k·(δ_B − a₁) + cos k·(δ_B − a₂)]
//! d₂ = −t₁ [sin k·δ_B + sin k·(δ_B − a₁) + sin k·(δ_B − a₂)]
//! d₃ =  m + 2t₂ [−sin k·a₁ + sin k·(a₁ − a₂) + sin k·a₂]
//! ```
//!
//! The two valleys are labelled by their mass: `K` is the Dirac point where
//! `d₃ = m − 3√3 t₂`, and `K′ = −K` the one where `d₃ = m + 3√3 t₂`. With the
//! `d₃` above this puts `K` at `(2π/3a)(1, −√3)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::kernel::{dispersion, BandMap, DVector, EnergyConvention, EnergyTally, KernelError};
use crate::quadrature::{reduce_indexed, BzGrid, GridSample, Momentum, Parallelism};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Smallest grid accepted by [`chern_numeric`].
pub const MIN_CHERN_GRID: usize = 12;

/// Masses below this (relative to `|m| + 3√3|t₂|`) count as critical.
pub const CRITICAL_MASS_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaldaneParams {
    pub t1: f64,
    pub t2: f64,
    pub m: f64,
    a: f64,
}

impl HaldaneParams {
    pub fn new(t1: f64, t2: f64, m: f64) -> Result<Self, ModelError> {
        Self::with_lattice_constant(t1, t2, m, 1.0)
    }

    pub fn with_lattice_constant(t1: f64, t2: f64, m: f64, a: f64) -> Result<Self, ModelError> {
        for (name, v) in [("t1", t1), ("t2", t2), ("m", m), ("a", a)] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        if a <= 0.0 {
            return Err(ModelError::NonPositiveLatticeConstant(a));
        }
        Ok(Self { t1, t2, m, a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn with_t2(self, t2: f64) -> Self {
        Self { t2, ..self }
    }

    /// Reciprocal vectors `b₁ = (2π/a)(1, −1/√3)`, `b₂ = (2π/a)(0, 2/√3)`.
    pub fn reciprocal_vectors(&self) -> ([f64; 2], [f64; 2]) {
        let s = 2.0 * PI / self.a;
        ([s, -s / SQRT3], [0.0, 2.0 * s / SQRT3])
    }

    /// `N × N` half-step offset grid over the reciprocal cell.
    pub fn grid(&self, n: usize) -> Result<BzGrid, ModelError> {
        let (b1, b2) = self.reciprocal_vectors();
        Ok(BzGrid::reciprocal(b1, b2, n, n)?)
    }
}

/// Phases `k·δ_B, k·(δ_B − a₁), k·(δ_B − a₂)` and `k·a₁, k·a₂`.
fn phases(k: Momentum, a: f64) -> ([f64; 3], f64, f64) {
    let ka1 = k[0] * a;
    let ka2 = a * (0.5 * k[0] + 0.5 * SQRT3 * k[1]);
    let kdb = a * (0.5 * k[0] + k[1] / (2.0 * SQRT3));
    ([kdb, kdb - ka1, kdb - ka2], ka1, ka2)
}

/// Structure factors `(Σ cos, −Σ sin, g)` with `d = (t₁ c, t₁ s, m + 2t₂ g)`.
fn structure(k: Momentum, a: f64) -> (f64, f64, f64) {
    let (nn, ka1, ka2) = phases(k, a);
    let c: f64 = nn.iter().map(|p| p.cos()).sum();
    let s: f64 = -nn.iter().map(|p| p.sin()).sum::<f64>();
    let g = -ka1.sin() + (ka1 - ka2).sin() + ka2.sin();
    (c, s, g)
}

/// Bloch vector of the Haldane model (identity shift omitted).
pub fn haldane_d(k: Momentum, p: &HaldaneParams) -> DVector {
    let (c, s, g) = structure(k, p.a);
    DVector { d1: p.t1 * c, d2: p.t1 * s, d3: p.m + 2.0 * p.t2 * g }
}

impl BandMap for HaldaneParams {
    fn d_vector(&self, k: Momentum) -> DVector {
        haldane_d(k, self)
    }
}

/// Dirac points `(K, K′)`, `K′ = −K`; see the module docs for the labelling.
pub fn haldane_dirac_points(p: &HaldaneParams) -> (Momentum, Momentum) {
    let s = 2.0 * PI / (3.0 * p.a);
    let k = [s, -s * SQRT3];
    (k, [-k[0], -k[1]])
}

/// Dirac masses `(m_K, m_K′) = (m − 3√3 t₂, m + 3√3 t₂)`.
pub fn haldane_masses(p: &HaldaneParams) -> (f64, f64) {
    let shift = 3.0 * SQRT3 * p.t2;
    (p.m - shift, p.m + shift)
}

/// Positive branch of the critical coupling `t₂,c = m/(3√3)`.
pub fn critical_t2(m: f64) -> f64 {
    m / (3.0 * SQRT3)
}

/// Where a parameter set sits in the phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Trivial,
    Topological,
    Critical,
}

pub fn is_critical(p: &HaldaneParams) -> bool {
    let (mk, mkp) = haldane_masses(p);
    let scale = p.m.abs() + 3.0 * SQRT3 * p.t2.abs();
    let tol = CRITICAL_MASS_RATIO * scale.max(f64::MIN_POSITIVE);
    mk.abs() <= tol || mkp.abs() <= tol
}

/// `C = (sgn m_K′ − sgn m_K)/2`.
pub fn chern_sign(p: &HaldaneParams) -> Result<i32, ModelError> {
    if is_critical(p) {
        return Err(ModelError::Critical);
    }
    let (mk, mkp) = haldane_masses(p);
    Ok(((mkp.signum() - mk.signum()) / 2.0) as i32)
}

pub fn phase(p: &HaldaneParams) -> Phase {
    match chern_sign(p) {
        Err(_) => Phase::Critical,
        Ok(0) => Phase::Trivial,
        Ok(_) => Phase::Topological,
    }
}

/// Normalized lower-band eigenvector of `d·σ`, with the branch chosen so the
/// norm never falls below `|d|`.
fn lower_band_state(d: &DVector) -> [Complex64; 2] {
    let r = dispersion(d);
    let v = if d.d3 >= 0.0 {
        [Complex64::new(d.d1, -d.d2), Complex64::new(-(d.d3 + r), 0.0)]
    } else {
        [Complex64::new(r - d.d3, 0.0), Complex64::new(-d.d1, -d.d2)]
    };
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / norm, v[1] / norm]
}

fn overlap(u: &[Complex64; 2], v: &[Complex64; 2]) -> Complex64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

/// Chern number of the occupied band from the lattice field strength on an
/// `n × n` plaquette mesh of the reciprocal cell.
///
/// Link variables are built from eigenvectors evaluated at the actual
/// momenta on both edges of the cell, so the non-periodic Bloch gauge of
/// `haldane_d` needs no boundary transformation.
pub fn chern_numeric(p: &HaldaneParams, n: usize) -> Result<i32, ModelError> {
    if n < MIN_CHERN_GRID {
        return Err(ModelError::GridTooSmall { n, min: MIN_CHERN_GRID });
    }
    let (b1, b2) = p.reciprocal_vectors();
    let side = n + 1;
    let momentum = |i: usize, j: usize| {
        let (f1, f2) = (i as f64 / n as f64, j as f64 / n as f64);
        [f1 * b1[0] + f2 * b2[0], f1 * b1[1] + f2 * b2[1]]
    };
    let ds: Vec<DVector> =
        (0..side * side).into_par_iter().map(|idx| haldane_d(momentum(idx / side, idx % side), p)).collect();
    let min_gap = ds.iter().map(dispersion).fold(f64::INFINITY, f64::min);
    let threshold = 1e-6 * p.t1.abs();
    if !(min_gap > threshold) {
        return Err(ModelError::GapTooSmall { gap: min_gap, threshold });
    }
    let states: Vec<[Complex64; 2]> = ds.iter().map(lower_band_state).collect();
    let at = |i: usize, j: usize| &states[i * side + j];
    let flux: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let loop_product = overlap(at(i, j), at(i + 1, j))
                        * overlap(at(i + 1, j), at(i + 1, j + 1))
                        * overlap(at(i + 1, j + 1), at(i, j + 1))
                        * overlap(at(i, j + 1), at(i, j));
                    loop_product.arg()
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    Ok((flux / (2.0 * PI)).round() as i32)
}

/// Structure factors of the `N × N` grid, cached for scans in `t₂`.
///
/// `d₁, d₂` scale with `t₁` and `d₃ = m + 2t₂ g(k)` is affine in `t₂`, so one
/// table serves every point of a `t₂` scan at fixed `t₁`, `m`. A `t₂` quench
/// leaves the in-plane components untouched, so `F₀ = ρ²(Δd₃)²` with
/// `ρ² = d₁² + d₂²`.
#[derive(Debug, Clone)]
pub struct HaldaneTable {
    n: usize,
    rho_sq: Vec<f64>,
    g: Vec<f64>,
}

impl HaldaneTable {
    pub fn new(n: usize, a: f64) -> Result<Self, ModelError> {
        let p = HaldaneParams::with_lattice_constant(1.0, 0.0, 0.0, a)?;
        let grid = p.grid(n)?;
        let (rho_sq, g): (Vec<f64>, Vec<f64>) = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let (c, s, g) = structure(grid.point(i), a);
                (c * c + s * s, g)
            })
            .unzip();
        Ok(Self { n, rho_sq, g })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// Stored energy for the quench `t₂ → t₂ + δ → t₂` at fixed `t₁`, `m`.
    #[allow(clippy::too_many_arguments)]
    pub fn quench_energy(
        &self,
        t1: f64,
        m: f64,
        t2_pre: f64,
        delta: f64,
        tau: Option<f64>,
        convention: EnergyConvention,
        parallelism: Parallelism,
    ) -> Result<EnergyTally, ModelError> {
        for (name, v) in [("t1", t1), ("m", m), ("t2", t2_pre), ("delta", delta)] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        if let Some(t) = tau {
            if !t.is_finite() || t < 0.0 {
                return Err(ModelError::Kernel(KernelError::InvalidTau(t)));
            }
        }
        let t2_during = t2_pre + delta;
        let t1_sq = t1 * t1;
        let reduced = reduce_indexed(self.len(), parallelism, |i| {
            let rho_sq = t1_sq * self.rho_sq[i];
            let g = self.g[i];
            let d3a = m + 2.0 * t2_pre * g;
            let d3b = m + 2.0 * t2_during * g;
            let eps_sq = rho_sq + d3a * d3a;
            let omega_sq = rho_sq + d3b * d3b;
            if eps_sq == 0.0 || omega_sq == 0.0 {
                return Ok::<_, ModelError>(GridSample::Dropped);
            }
            let jump = d3b - d3a;
            let long_time = rho_sq * jump * jump / (omega_sq * eps_sq.sqrt());
            Ok(GridSample::Value(match tau {
                None => long_time,
                Some(t) => (1.0 - (2.0 * omega_sq.sqrt() * t).cos()) * long_time,
            }))
        })?;
        Ok(EnergyTally {
            energy: reduced.normalized(convention),
            dropped_modes: reduced.dropped,
            points: reduced.points,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t1: f64, t2: f64, m: f64) -> HaldaneParams {
        HaldaneParams::new(t1, t2, m).unwrap()
    }

    #[test]
    fn gamma_point() {
        let p = params(0.7, 0.3, 1.2);
        let d = haldane_d([0.0, 0.0], &p);
        assert!((d.d1 - 2.1).abs() < 1e-15);
        assert_eq!(d.d2, 0.0);
        assert_eq!(d.d3, 1.2);
    }

    #[test]
    fn k_prime_sits_at_minus_k() {
        let p = params(1.0, 0.1, 1.0);
        let (k, kp) = haldane_dirac_points(&p);
        assert_eq!(kp, [-k[0], -k[1]]);
        let expected = [-2.0 * PI / 3.0, 2.0 * PI / SQRT3];
        let same = |x: Momentum, y: Momentum| (x[0] - y[0]).abs() < 1e-14 && (x[1] - y[1]).abs() < 1e-14;
        assert!(same(kp, expected));
        // K′·a₁ = −2π/3, K′·a₂ = +2π/3
        let (_, ka1, ka2) = phases(kp, 1.0);
        assert!((ka1 + 2.0 * PI / 3.0).abs() < 1e-14);
        assert!((ka2 - 2.0 * PI / 3.0).abs() < 1e-14);
        for q in [k, kp] {
            let d = haldane_d(q, &p);
            assert!(d.d1 * d.d1 + d.d2 * d.d2 < 1e-24);
        }
    }

    #[test]
    fn masses_and_critical_coupling() {
        assert_eq!(haldane_masses(&params(1.0, 0.0, 1.0)), (1.0, 1.0));
        let (mk, mkp) = haldane_masses(&params(1.0, 1.0 / (3.0 * SQRT3), 1.0));
        assert!(mk.abs() < 1e-15 && (mkp - 2.0).abs() < 1e-15);
        let (mk, mkp) = haldane_masses(&params(1.0, 0.1, 1.0));
        assert!((mk - 0.480_384_757_729_336_8).abs() < 1e-15);
        assert!((mkp - 1.519_615_242_270_663).abs() < 1e-15);
        assert!((critical_t2(1.0) - 0.192_450_089_729_875_25).abs() < 1e-16);
        assert_eq!(critical_t2(0.0), 0.0);
        assert!((critical_t2(2.0) - 2.0 / (3.0 * 3f64.sqrt())).abs() < 1e-16);
    }

    #[test]
    fn mass_equals_gap_at_labelled_valley() {
        let p = params(1.3, -0.21, 0.4);
        let (k, kp) = haldane_dirac_points(&p);
        let (mk, mkp) = haldane_masses(&p);
        assert!((dispersion(&haldane_d(k, &p)) - mk.abs()).abs() < 1e-12);
        assert!((dispersion(&haldane_d(kp, &p)) - mkp.abs()).abs() < 1e-12);
        assert!((haldane_d(k, &p).d3 - mk).abs() < 1e-12);
    }

    #[test]
    fn chern_sign_phase_table() {
        assert_eq!(chern_sign(&params(1.0, 0.3, 1.0)), Ok(1));
        assert_eq!(chern_sign(&params(1.0, 0.0, 1.0)), Ok(0));
        assert_eq!(chern_sign(&params(1.0, -0.3, 1.0)), Ok(-1));
        assert_eq!(chern_sign(&params(1.0, critical_t2(1.0), 1.0)), Err(ModelError::Critical));
        assert_eq!(phase(&params(1.0, -critical_t2(1.0), 1.0)), Phase::Critical);
    }

    #[test]
    fn chern_numeric_matches_sign() {
        for (t2, c) in [(0.3, 1), (0.0, 0), (-0.3, -1)] {
            assert_eq!(chern_numeric(&params(1.0, t2, 1.0), 24), Ok(c));
        }
    }

    #[test]
    fn chern_numeric_guards() {
        assert_eq!(
            chern_numeric(&params(1.0, 0.3, 1.0), 8),
            Err(ModelError::GridTooSmall { n: 8, min: MIN_CHERN_GRID })
        );
        // graphene: gap closes exactly on a grid containing K
        assert!(matches!(chern_numeric(&params(1.0, 0.0, 0.0), 24), Err(ModelError::GapTooSmall { .. })));
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let n = 16;
        let table = HaldaneTable::new(n, 1.0).unwrap();
        let pre = params(0.8, 0.05, 1.0);
        let during = pre.with_t2(0.15);
        let grid = pre.grid(n).unwrap();
        let direct =
            crate::kernel::total_energy(&pre, &during, &grid, None, EnergyConvention::PerMode, Parallelism::Serial)
                .unwrap();
        let cached =
            table.quench_energy(0.8, 1.0, 0.05, 0.1, None, EnergyConvention::PerMode, Parallelism::Serial).unwrap();
        assert!((direct.energy - cached.energy).abs() < 1e-13 * direct.energy);
    }
}
