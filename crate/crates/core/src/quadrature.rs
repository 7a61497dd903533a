//! Momentum-space discretizations and radial shell integrals.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::EnergyConvention;

/// Momentum in Cartesian components. One-dimensional grids leave `k[1] = 0`.
pub type Momentum = [f64; 2];

/// Points per reduction chunk. The chunking, not the thread count, fixes
/// the order of floating-point operations.
const CHUNK: usize = 4096;

/// Levels of dyadic refinement applied to the first radial panel.
const GRADING_LEVELS: usize = 52;

/// Nodes per Gauss–Legendre panel.
const GL_ORDER: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("grid needs at least 2 points per direction, got {0}")]
    TooFewPoints(usize),
    #[error("grid offset must lie in (0, 1), got {0}")]
    BadOffset(f64),
    #[error("invalid interval [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("radial shell needs at least 16 panels, got {0}")]
    TooFewPanels(usize),
    #[error("cutoff must be positive and finite, got {0}")]
    BadCutoff(f64),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("pre-quench mass must be non-zero")]
    GaplessPrequench,
    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),
}

/// Execution strategy for grid reductions. Both give bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    /// Use the current rayon pool.
    #[default]
    Parallel,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum in, keeping its compensation term.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Discretized Brillouin zone with half-step (or custom) offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BzGrid {
    /// `k_j = lo + (j + offset)(hi − lo)/n`.
    Line { n: usize, lo: f64, hi: f64, offset: f64 },
    /// `k = ((n1 + o1)/N1) b1 + ((n2 + o2)/N2) b2`.
    Reciprocal { b1: [f64; 2], b2: [f64; 2], n1: usize, n2: usize, offsets: [f64; 2] },
}

impl BzGrid {
    /// `n` points on `(−π, π)` with half-step offset.
    pub fn line(n: usize) -> Result<Self, QuadratureError> {
        Self::line_with_offset(n, -PI, PI, 0.5)
    }

    pub fn line_on(n: usize, lo: f64, hi: f64) -> Result<Self, QuadratureError> {
        Self::line_with_offset(n, lo, hi, 0.5)
    }

    pub fn line_with_offset(n: usize, lo: f64, hi: f64, offset: f64) -> Result<Self, QuadratureError> {
        if n < 2 {
            return Err(QuadratureError::TooFewPoints(n));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(QuadratureError::BadInterval(lo, hi));
        }
        check_offset(offset)?;
        Ok(BzGrid::Line { n, lo, hi, offset })
    }

    /// Half-step offset grid over the cell spanned by `b1`, `b2`.
    pub fn reciprocal(b1: [f64; 2], b2: [f64; 2], n1: usize, n2: usize) -> Result<Self, QuadratureError> {
        if n1 < 2 {
            return Err(QuadratureError::TooFewPoints(n1));
        }
        if n2 < 2 {
            return Err(QuadratureError::TooFewPoints(n2));
        }
        if !b1.iter().chain(b2.iter()).all(|c| c.is_finite()) {
            return Err(QuadratureError::NonFinite("reciprocal vector"));
        }
        Ok(BzGrid::Reciprocal { b1, b2, n1, n2, offsets: [0.5, 0.5] })
    }

    pub fn dim(&self) -> usize {
        match self {
            BzGrid::Line { .. } => 1,
            BzGrid::Reciprocal { .. } => 2,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            BzGrid::Line { n, .. } => n,
            BzGrid::Reciprocal { n1, n2, .. } => n1 * n2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `index` in row-major order (`n2` fastest for 2D grids).
    pub fn point(&self, index: usize) -> Momentum {
        match *self {
            BzGrid::Line { n, lo, hi, offset } => [lo + (index as f64 + offset) * (hi - lo) / n as f64, 0.0],
            BzGrid::Reciprocal { b1, b2, n1, n2, offsets } => {
                let (i, j) = (index / n2, index % n2);
                let f1 = (i as f64 + offsets[0]) / n1 as f64;
                let f2 = (j as f64 + offsets[1]) / n2 as f64;
                [f1 * b1[0] + f2 * b2[0], f1 * b1[1] + f2 * b2[1]]
            }
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Momentum> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

fn check_offset(offset: f64) -> Result<(), QuadratureError> {
    if offset > 0.0 && offset < 1.0 {
        Ok(())
    } else {
        Err(QuadratureError::BadOffset(offset))
    }
}

/// Outcome of evaluating a summand at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSample {
    Value(f64),
    /// Left out of the sum and counted.
    Dropped,
}

/// Result of a fixed-order grid reduction.
#[derive(Debug, Clone, Copy)]
pub struct GridReduction {
    pub sum: CompensatedSum,
    pub dropped: usize,
    pub points: usize,
}

impl GridReduction {
    pub fn normalized(&self, convention: EnergyConvention) -> f64 {
        match convention {
            EnergyConvention::RawSum => self.sum.value(),
            EnergyConvention::PerMode => self.sum.value() / self.points as f64,
        }
    }
}

/// Sums `f` over the grid in index order, chunk by chunk.
///
/// Each chunk is accumulated with compensation and chunk partials are merged
/// in chunk order, so the result does not depend on `parallelism`. The
/// first error in index order is returned.
pub fn reduce_grid<F, E>(grid: &BzGrid, parallelism: Parallelism, f: F) -> Result<GridReduction, E>
where
    F: Fn(Momentum) -> Result<GridSample, E> + Sync,
    E: Send,
{
    reduce_indexed(grid.len(), parallelism, |i| f(grid.point(i)))
}

pub(crate) fn reduce_indexed<F, E>(len: usize, parallelism: Parallelism, f: F) -> Result<GridReduction, E>
where
    F: Fn(usize) -> Result<GridSample, E> + Sync,
    E: Send,
{
    let chunk = |c: usize| -> Result<(CompensatedSum, usize), E> {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(len);
        let mut acc = CompensatedSum::new();
        let mut dropped = 0;
        for i in start..end {
            match f(i)? {
                GridSample::Value(v) => acc.add(v),
                GridSample::Dropped => dropped += 1,
            }
        }
        Ok((acc, dropped))
    };
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<Result<(CompensatedSum, usize), E>> = match parallelism {
        Parallelism::Serial => (0..n_chunks).map(chunk).collect(),
        Parallelism::Parallel => (0..n_chunks).into_par_iter().map(chunk).collect(),
    };
    let mut sum = CompensatedSum::new();
    let mut dropped = 0;
    for p in partials {
        let (s, d) = p?;
        sum.merge(&s);
        dropped += d;
    }
    Ok(GridReduction { sum, dropped, points: len })
}

/// Error raised by a summand, tagged with the momentum where it occurred.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("summand failed at k = ({}, {}): {source}", .k[0], .k[1])]
pub struct BzSumError<E: std::error::Error + 'static> {
    pub k: Momentum,
    #[source]
    pub source: E,
}

/// Compensated fixed-order sum of `f` over the grid.
pub fn bz_sum<F, E>(
    f: F,
    grid: &BzGrid,
    convention: EnergyConvention,
    parallelism: Parallelism,
) -> Result<f64, BzSumError<E>>
where
    F: Fn(Momentum) -> Result<f64, E> + Sync,
    E: std::error::Error + Send + 'static,
{
    let reduced =
        reduce_grid(grid, parallelism, |k| f(k).map(GridSample::Value).map_err(|source| BzSumError { k, source }))?;
    Ok(reduced.normalized(convention))
}

/// Surface area `S_{d−1} = 2π^{d/2}/Γ(d/2)` of the unit sphere in `d`
/// dimensions, from the integer and half-integer factorial forms of Γ.
/// Returns 0 for `d = 0`.
pub fn sphere_surface(d: u32) -> f64 {
    if d == 0 {
        return 0.0;
    }
    if d.is_multiple_of(2) {
        // Γ(d/2) = (d/2 − 1)!
        let half = d / 2;
        let fact: f64 = (1..half).map(f64::from).product();
        2.0 * PI.powi(half as i32) / fact
    } else {
        // 2π^{d/2}/Γ(d/2) = 2^{(d+1)/2} π^{(d−1)/2} / (d−2)!!
        let half = (d - 1) / 2;
        let double_fact: f64 = (1..=d.saturating_sub(2)).rev().step_by(2).map(f64::from).product();
        2f64.powi(half as i32 + 1) * PI.powi(half as i32) / double_fact
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n`, started from the Tricomi guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = CompensatedSum::new();
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (x, w) in self.mapped(lo, lo + h) {
                acc.add(w * f(x));
            }
        }
        acc.value()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = if n == 0 { 0.0 } else { n as f64 * (x * p1 - p0) / (x * x - 1.0) };
    (p, d)
}

/// Which radial integrand to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialIntegrand {
    /// `k^{d+1} / ((k² + m_B²) √(k² + m_A²))`.
    Full,
    /// `√(k² + m_A²)` replaced by `|m_A|`, valid for `k ≪ |m_A|`.
    #[default]
    Simplified,
}

/// Momentum shell `0 ≤ k ≤ Λ` in `d` dimensions with a fixed composite
/// Gauss–Legendre rule.
///
/// The rule uses `panels` uniform panels; the panel touching `k = 0` is
/// refined dyadically so Lorentzian features of any width down to
/// `Λ/panels · 2⁻⁵²` are resolved. Nodes do not depend on the masses, so a
/// scan over masses sees a smooth quadrature error.
#[derive(Debug, Clone)]
pub struct RadialShell {
    dim: u32,
    cutoff: f64,
    panels: usize,
    rule: Vec<(f64, f64)>,
}

/// Result of evaluating a shell integral at `N` and `2N` panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PanelDoubling {
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
}

impl RadialShell {
    pub fn new(dim: u32, cutoff: f64, panels: usize) -> Result<Self, QuadratureError> {
        if dim == 0 {
            return Err(QuadratureError::ZeroDimension);
        }
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(QuadratureError::BadCutoff(cutoff));
        }
        if panels < 16 {
            return Err(QuadratureError::TooFewPanels(panels));
        }
        let gl = GaussLegendre::new(GL_ORDER);
        let h = cutoff / panels as f64;
        let mut rule = Vec::with_capacity((panels + GRADING_LEVELS) * GL_ORDER);
        let mut hi = h;
        for _ in 0..GRADING_LEVELS {
            let lo = 0.5 * hi;
            rule.extend(gl.mapped(lo, hi));
            hi = lo;
        }
        rule.extend(gl.mapped(0.0, hi));
        for p in 1..panels {
            let lo = p as f64 * h;
            let hi = if p + 1 == panels { cutoff } else { lo + h };
            rule.extend(gl.mapped(lo, hi));
        }
        Ok(Self { dim, cutoff, panels, rule })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    /// `∫₀^Λ k^{d+1} / ((k² + m_B²) √(k² + m_A²)) dk` (or its simplified
    /// form) without the dimensional prefactor.
    pub fn integral(&self, m_a: f64, m_b: f64, integrand: RadialIntegrand) -> Result<f64, QuadratureError> {
        check_masses(m_a, m_b)?;
        let d = self.dim as i32;
        let (ma2, mb2, ma_abs) = (m_a * m_a, m_b * m_b, m_a.abs());
        let mut acc = CompensatedSum::new();
        for &(k, w) in &self.rule {
            let k2 = k * k;
            let denom_a = match integrand {
                RadialIntegrand::Full => (k2 + ma2).sqrt(),
                RadialIntegrand::Simplified => ma_abs,
            };
            acc.add(w * k.powi(d + 1) / ((k2 + mb2) * denom_a));
        }
        Ok(acc.value())
    }

    /// Stored energy `S_{d−1}/(2π)^d (ΔM)² ∫ …` of the d-dimensional Dirac
    /// model.
    pub fn energy(&self, m_a: f64, m_b: f64, delta_m: f64, integrand: RadialIntegrand) -> Result<f64, QuadratureError> {
        if !delta_m.is_finite() {
            return Err(QuadratureError::NonFinite("delta_m"));
        }
        let integral = self.integral(m_a, m_b, integrand)?;
        if delta_m == 0.0 {
            return Ok(0.0);
        }
        let prefactor = sphere_surface(self.dim) / (2.0 * PI).powi(self.dim as i32);
        Ok(prefactor * delta_m * delta_m * integral)
    }

    /// Energy at `N` and `2N` panels.
    pub fn panel_doubling(
        &self,
        m_a: f64,
        m_b: f64,
        delta_m: f64,
        integrand: RadialIntegrand,
    ) -> Result<PanelDoubling, QuadratureError> {
        let coarse = self.energy(m_a, m_b, delta_m, integrand)?;
        let fine = RadialShell::new(self.dim, self.cutoff, 2 * self.panels)?.energy(m_a, m_b, delta_m, integrand)?;
        let relative_change = if fine == 0.0 { (fine - coarse).abs() } else { ((fine - coarse) / fine).abs() };
        Ok(PanelDoubling { coarse, fine, relative_change })
    }
}

fn check_masses(m_a: f64, m_b: f64) -> Result<(), QuadratureError> {
    if !m_a.is_finite() {
        return Err(QuadratureError::NonFinite("m_a"));
    }
    if !m_b.is_finite() {
        return Err(QuadratureError::NonFinite("m_b"));
    }
    if m_a == 0.0 {
        return Err(QuadratureError::GaplessPrequench);
    }
    Ok(())
}

/// Stored energy of the d-dimensional Dirac model on a shell of radius
/// `cutoff`, integrated with `panels` composite Gauss–Legendre panels.
pub fn dirac_energy_radial(
    dim: u32,
    m_a: f64,
    m_b: f64,
    cutoff: f64,
    panels: usize,
    delta_m: f64,
    integrand: RadialIntegrand,
) -> Result<f64, QuadratureError> {
    RadialShell::new(dim, cutoff, panels)?.energy(m_a, m_b, delta_m, integrand)
}
