//! Parameter scans, finite-difference derivatives and the two kinds of
//! non-analyticity a Dirac-cone gap closing leaves in the stored energy:
//! a finite jump of the d-th derivative in odd `d`, a logarithmic
//! divergence in even `d`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::quadrature::sphere_surface;

/// Tolerance on sample spacing, relative to the coordinate magnitude.
pub const SPACING_TOLERANCE: f64 = 1e-12;

/// Minimum samples on one side of the critical point for a log fit.
pub const MIN_LOG_SAMPLES: usize = 8;

/// A log fit must beat a straight line by this factor in RMS residual to
/// count as a detected divergence.
pub const LOG_MODEL_PREFERENCE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("scan needs matching, non-empty coordinate and value arrays")]
    Shape,
    #[error("scan coordinates must increase with uniform spacing (sample {0})")]
    NonUniform(usize),
    #[error("non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("derivative order {0} is not supported (use 1 or 2)")]
    Order(u32),
    #[error("{needed} samples needed, scan has {got}")]
    TooShort { needed: usize, got: usize },
    #[error("location {0} is not strictly inside the scan")]
    OutsideScan(f64),
    #[error("{side} side of {x_c} has {got} usable samples, {needed} needed")]
    TooFewSide { side: &'static str, x_c: f64, got: usize, needed: usize },
    #[error("no side has {MIN_LOG_SAMPLES} samples with {r_min} <= |x - x_c| <= {r_max}")]
    EmptyWindow { r_min: f64, r_max: f64 },
    #[error("exclusion zone must drop at least one sample per side")]
    Exclusion,
    #[error("dimension {0} has the wrong parity for this predictor")]
    Parity(u32),
    #[error("quench increment must be non-zero and finite")]
    Increment,
    #[error("pre-quench mass must be non-zero and finite")]
    Mass,
    #[error("invalid search interval [{0}, {1}]")]
    Search(f64, f64),
}

/// Energy (or derivative) sampled on a uniform grid of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamScan {
    name: String,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ParamScan {
    pub fn new(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Result<Self, AnalysisError> {
        if x.is_empty() || x.len() != y.len() {
            return Err(AnalysisError::Shape);
        }
        if let Some(i) = x.iter().zip(&y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(AnalysisError::NonFinite(i));
        }
        if x.len() > 1 {
            let step = x[1] - x[0];
            let scale = x.iter().fold(step.abs(), |m, v| m.max(v.abs()));
            if step <= 0.0 {
                return Err(AnalysisError::NonUniform(1));
            }
            for i in 1..x.len() {
                if ((x[i] - x[i - 1]) - step).abs() > SPACING_TOLERANCE * scale {
                    return Err(AnalysisError::NonUniform(i));
                }
            }
        }
        Ok(Self { name: name.into(), x, y })
    }

    /// `x_i = start + i·step`.
    pub fn uniform(name: impl Into<String>, start: f64, step: f64, y: Vec<f64>) -> Result<Self, AnalysisError> {
        let x = (0..y.len()).map(|i| start + i as f64 * step).collect();
        Self::new(name, x, y)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean sample spacing (0 for a single sample).
    pub fn step(&self) -> f64 {
        if self.x.len() < 2 {
            0.0
        } else {
            (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64
        }
    }
}

/// Central difference of order 1 or 2; the two endpoints are dropped.
pub fn central_derivative(scan: &ParamScan, order: u32) -> Result<ParamScan, AnalysisError> {
    if order != 1 && order != 2 {
        return Err(AnalysisError::Order(order));
    }
    let needed = order as usize + 2;
    if scan.len() < needed {
        return Err(AnalysisError::TooShort { needed, got: scan.len() });
    }
    let h = scan.step();
    let y = &scan.y;
    let values: Vec<f64> = (1..y.len() - 1)
        .map(|i| match order {
            1 => (y[i + 1] - y[i - 1]) / (2.0 * h),
            _ => (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h),
        })
        .collect();
    let x = scan.x[1..scan.len() - 1].to_vec();
    ParamScan::new(format!("d{order}({})", scan.name), x, values)
}

/// Least-squares line `y = α + β t`; returns `(α, β, rms residual)`.
fn fit_line(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for (ti, yi) in t.iter().zip(y) {
        stt += (ti - tm) * (ti - tm);
        sty += (ti - tm) * (yi - ym);
    }
    let beta = if stt > 0.0 { sty / stt } else { 0.0 };
    let alpha = ym - beta * tm;
    let ss: f64 = t.iter().zip(y).map(|(ti, yi)| (yi - alpha - beta * ti).powi(2)).sum();
    (alpha, beta, (ss / n).sqrt())
}

/// Parameters of a fitted `a·ln|x − x_c| + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFit {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
    pub samples: usize,
}

/// Characterization of a non-analyticity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularityReport {
    Jump {
        location: f64,
        /// `|right − left|`.
        magnitude: f64,
        left: f64,
        right: f64,
        /// RMS residual of the two one-sided line fits.
        residual: f64,
    },
    LogDivergence {
        location: f64,
        /// Pooled fit of `a·ln|x − x_c| + b`.
        a: f64,
        b: f64,
        residual: f64,
        /// RMS error of the separate per-side fits over all samples; equals
        /// `residual` when only one side has enough samples.
        side_residual: f64,
        /// RMS residual of a single straight line on the same samples.
        linear_residual: f64,
        left: Option<LogFit>,
        right: Option<LogFit>,
        samples: usize,
    },
}

impl SingularityReport {
    pub fn location(&self) -> f64 {
        match *self {
            SingularityReport::Jump { location, .. } | SingularityReport::LogDivergence { location, .. } => location,
        }
    }

    pub fn residual(&self) -> f64 {
        match *self {
            SingularityReport::Jump { residual, .. } | SingularityReport::LogDivergence { residual, .. } => residual,
        }
    }

    /// Jump height, if this is a jump.
    pub fn magnitude(&self) -> Option<f64> {
        match *self {
            SingularityReport::Jump { magnitude, .. } => Some(magnitude),
            _ => None,
        }
    }

    /// Pooled log coefficient, if this is a log divergence.
    pub fn log_coefficient(&self) -> Option<f64> {
        match *self {
            SingularityReport::LogDivergence { a, .. } => Some(a),
            _ => None,
        }
    }

    /// Residual used to compare candidate centres and to decide detection:
    /// the side-resolved log residual for log fits, the fit residual otherwise.
    pub fn model_residual(&self) -> f64 {
        match *self {
            SingularityReport::LogDivergence { side_residual, .. } => side_residual,
            SingularityReport::Jump { residual, .. } => residual,
        }
    }

    /// Whether the log model, fitted side by side, beats a single straight
    /// line by [`LOG_MODEL_PREFERENCE`].
    pub fn log_model_preferred(&self) -> bool {
        match *self {
            SingularityReport::LogDivergence { side_residual, linear_residual, .. } => {
                linear_residual >= LOG_MODEL_PREFERENCE * side_residual
            }
            _ => false,
        }
    }
}

/// Samples kept for each one-sided line fit and the zone skipped next to `x_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JumpOptions {
    pub exclusion: usize,
    pub window: usize,
}

impl Default for JumpOptions {
    fn default() -> Self {
        Self { exclusion: 2, window: 4 }
    }
}

/// Jump of a derivative scan at `x_c`, using the default window of 4.
pub fn estimate_jump(deriv: &ParamScan, x_c: f64, exclusion: usize) -> Result<SingularityReport, AnalysisError> {
    estimate_jump_with(deriv, x_c, JumpOptions { exclusion, ..JumpOptions::default() })
}

/// One-sided limits at `x_c` by linear extrapolation from the `window`
/// samples beyond the `exclusion` nearest ones on each side.
pub fn estimate_jump_with(deriv: &ParamScan, x_c: f64, opts: JumpOptions) -> Result<SingularityReport, AnalysisError> {
    if opts.exclusion < 1 {
        return Err(AnalysisError::Exclusion);
    }
    let window = opts.window.max(2);
    let x = deriv.x();
    if !(x_c > x[0] && x_c < x[x.len() - 1]) {
        return Err(AnalysisError::OutsideScan(x_c));
    }
    let needed = opts.exclusion + window;
    let left_idx: Vec<usize> = (0..x.len()).rev().filter(|&i| x[i] < x_c).collect();
    let right_idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] > x_c).collect();
    for (side, idx) in [("left", &left_idx), ("right", &right_idx)] {
        if idx.len() < needed {
            return Err(AnalysisError::TooFewSide { side, x_c, got: idx.len(), needed });
        }
    }
    let side_limit = |idx: &[usize]| {
        let chosen = &idx[opts.exclusion..needed];
        let t: Vec<f64> = chosen.iter().map(|&i| x[i] - x_c).collect();
        let y: Vec<f64> = chosen.iter().map(|&i| deriv.y()[i]).collect();
        let (alpha, _, res) = fit_line(&t, &y);
        (alpha, res)
    };
    let (left, res_l) = side_limit(&left_idx);
    let (right, res_r) = side_limit(&right_idx);
    Ok(SingularityReport::Jump {
        location: x_c,
        magnitude: (right - left).abs(),
        left,
        right,
        residual: (0.5 * (res_l * res_l + res_r * res_r)).sqrt(),
    })
}

/// Midpoint between the neighbouring samples with the largest change,
/// searched within `[lo, hi]`.
pub fn locate_jump(deriv: &ParamScan, lo: f64, hi: f64) -> Result<f64, AnalysisError> {
    if !(lo < hi) {
        return Err(AnalysisError::Search(lo, hi));
    }
    let (x, y) = (deriv.x(), deriv.y());
    (1..x.len())
        .filter(|&i| x[i - 1] >= lo && x[i] <= hi)
        .map(|i| (i, (y[i] - y[i - 1]).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| 0.5 * (x[i - 1] + x[i]))
        .ok_or(AnalysisError::Search(lo, hi))
}

fn fit_log(samples: &[(f64, f64)], x_c: f64) -> LogFit {
    let t: Vec<f64> = samples.iter().map(|(x, _)| (x - x_c).abs().ln()).collect();
    let y: Vec<f64> = samples.iter().map(|&(_, y)| y).collect();
    let (b, a, residual) = fit_line(&t, &y);
    LogFit { a, b, residual, samples: samples.len() }
}

/// Fits `a·ln|x − x_c| + b` to the samples with `r_min ≤ |x − x_c| ≤ r_max`,
/// on each side separately and pooled.
pub fn fit_log_divergence(deriv: &ParamScan, x_c: f64, window: (f64, f64)) -> Result<SingularityReport, AnalysisError> {
    let (r_min, r_max) = window;
    let in_window = |x: f64| {
        let r = (x - x_c).abs();
        r >= r_min && r <= r_max
    };
    let pairs = deriv.x().iter().copied().zip(deriv.y().iter().copied());
    let left: Vec<(f64, f64)> = pairs.clone().filter(|&(x, _)| x < x_c && in_window(x)).collect();
    let right: Vec<(f64, f64)> = pairs.filter(|&(x, _)| x > x_c && in_window(x)).collect();
    if left.len() < MIN_LOG_SAMPLES && right.len() < MIN_LOG_SAMPLES {
        return Err(AnalysisError::EmptyWindow { r_min, r_max });
    }
    let side = |s: &[(f64, f64)]| (s.len() >= MIN_LOG_SAMPLES).then(|| fit_log(s, x_c));
    let pooled: Vec<(f64, f64)> = left.iter().chain(&right).copied().collect();
    let fit = fit_log(&pooled, x_c);
    let xs: Vec<f64> = pooled.iter().map(|(x, _)| x - x_c).collect();
    let ys: Vec<f64> = pooled.iter().map(|&(_, y)| y).collect();
    let (_, _, linear_residual) = fit_line(&xs, &ys);
    let (left, right) = (side(&left), side(&right));
    let side_residual = match (left, right) {
        (Some(l), Some(r)) => {
            let ss = l.residual.powi(2) * l.samples as f64 + r.residual.powi(2) * r.samples as f64;
            (ss / (l.samples + r.samples) as f64).sqrt()
        }
        _ => fit.residual,
    };
    Ok(SingularityReport::LogDivergence {
        location: x_c,
        a: fit.a,
        b: fit.b,
        residual: fit.residual,
        side_residual,
        linear_residual,
        left,
        right,
        samples: pooled.len(),
    })
}

/// Candidate centre in `[lo, hi]`, on a quarter-step lattice, whose
/// side-resolved log fit has the smallest residual.
pub fn locate_log_divergence(
    deriv: &ParamScan,
    lo: f64,
    hi: f64,
    window: (f64, f64),
) -> Result<SingularityReport, AnalysisError> {
    if !(lo <= hi) {
        return Err(AnalysisError::Search(lo, hi));
    }
    let quarter = 0.25 * deriv.step();
    let count = if quarter > 0.0 { ((hi - lo) / quarter).floor() as usize } else { 0 };
    let mut best: Option<SingularityReport> = None;
    let mut last_err = None;
    for i in 0..=count {
        let x_c = lo + i as f64 * quarter;
        match fit_log_divergence(deriv, x_c, window) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.model_residual() < b.model_residual()) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(AnalysisError::Search(lo, hi)))
}

/// Richardson extrapolation of an `O(h^order)` estimate from steps `h`, `h/2`.
pub fn richardson(coarse: f64, fine: f64, order: u32) -> f64 {
    let factor = 2f64.powi(order as i32) - 1.0;
    fine + (fine - coarse) / factor
}

/// Jump estimates at steps `h` and `h/2` plus their extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRefinement {
    pub location: f64,
    pub step: f64,
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
}

#[derive(Debug, Error)]
pub enum RefineError<E: std::error::Error + 'static> {
    #[error("energy evaluation at {x} failed: {source}")]
    Energy {
        x: f64,
        #[source]
        source: E,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Estimates the first-derivative jump of `energy` at `x_c` on local scans
/// centred on `x_c` with steps `h` and `h/2`, then removes the `O(h²)`
/// error of the linear extrapolation by step halving.
pub fn refine_jump<F, E>(
    mut energy: F,
    x_c: f64,
    step: f64,
    opts: JumpOptions,
) -> Result<JumpRefinement, RefineError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: std::error::Error + 'static,
{
    let half_points = opts.exclusion + opts.window.max(2) + 2;
    let mut at_step = |h: f64| -> Result<f64, RefineError<E>> {
        let start = x_c - (half_points as f64 - 0.5) * h;
        let mut ys = Vec::with_capacity(2 * half_points);
        for j in 0..2 * half_points {
            let x = start + j as f64 * h;
            ys.push(energy(x).map_err(|source| RefineError::Energy { x, source })?);
        }
        let scan = ParamScan::uniform("local", start, h, ys)?;
        let deriv = central_derivative(&scan, 1)?;
        Ok(estimate_jump_with(&deriv, x_c, opts)?.magnitude().unwrap_or(0.0))
    };
    let coarse = at_step(step)?;
    let fine = at_step(0.5 * step)?;
    Ok(JumpRefinement { location: x_c, step, coarse, fine, extrapolated: richardson(coarse, fine, 2) })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn double_factorial(n: u32) -> f64 {
    (1..=n).rev().step_by(2).map(f64::from).product()
}

/// Jump of the d-th `m_A` derivative of the Dirac stored energy at
/// `m_A = −δ`, for odd `d`: `S_{d−1}/(2π)^d · π · d! · δ²/|m_A|`.
pub fn predicted_jump(d: u32, delta: f64, m_a_abs: f64) -> Result<f64, AnalysisError> {
    if d.is_multiple_of(2) {
        return Err(AnalysisError::Parity(d));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(AnalysisError::Increment);
    }
    if !(m_a_abs > 0.0 && m_a_abs.is_finite()) {
        return Err(AnalysisError::Mass);
    }
    // S_{d−1} π / (2π)^d = 1 / ((d−2)!! (2π)^{(d−1)/2})
    let half = ((d - 1) / 2) as i32;
    let geometric = 1.0 / (double_factorial(d.saturating_sub(2)) * (2.0 * PI).powi(half));
    let delta = delta.abs();
    Ok(geometric * factorial(d) * delta * (delta / m_a_abs))
}

/// Coefficient of `ln|m_A + δ|` in the d-th `m_A` derivative at a general
/// pre-quench mass, for even `d`.
pub fn predicted_log_coefficient_at(d: u32, delta: f64, m_a_abs: f64) -> Result<f64, AnalysisError> {
    if d % 2 == 1 || d == 0 {
        return Err(AnalysisError::Parity(d));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(AnalysisError::Increment);
    }
    if !(m_a_abs > 0.0 && m_a_abs.is_finite()) {
        return Err(AnalysisError::Mass);
    }
    // (−m_B²)^{d/2} · ½ ln(Λ²/m_B²) contributes (−1)^{d/2+1} m_B^d ln|m_B|.
    let sign = if (d / 2) % 2 == 1 { 1.0 } else { -1.0 };
    let prefactor = sphere_surface(d) / (2.0 * PI).powi(d as i32);
    Ok(sign * prefactor * factorial(d) * delta * delta / m_a_abs)
}

/// Log coefficient at criticality `|m_A| = δ`; equals `δ/π` for `d = 2`.
pub fn predicted_log_coefficient(d: u32, delta: f64) -> Result<f64, AnalysisError> {
    predicted_log_coefficient_at(d, delta, delta.abs())
}

/// `H_d = Σ_{k=1}^d C(d,k)(−1)^{k−1}/k`, summed in exact rational arithmetic.
pub fn harmonic_alt(d: u32) -> f64 {
    let mut sum = BigRational::zero();
    let mut binom = BigInt::one();
    for k in 1..=d {
        binom = binom * BigInt::from(d - k + 1) / BigInt::from(k);
        let term = BigRational::new(binom.clone(), BigInt::from(k));
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum.to_f64().unwrap_or(f64::NAN)
}

/// `1 − atan(x)/x`, accurate for small `|x|`.
fn one_minus_atan_ratio(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x2 * (1.0 / 3.0 - x2 * (1.0 / 5.0 - x2 / 7.0))
    } else {
        1.0 - x.atan() / x
    }
}

/// `u − ln(1 + u)`, accurate for small `u ≥ 0`.
fn u_minus_log1p(u: f64) -> f64 {
    if u < 1e-3 {
        u * u * (0.5 - u * (1.0 / 3.0 - u * (0.25 - u / 5.0)))
    } else {
        u - u.ln_1p()
    }
}

/// 1D Dirac stored energy with `√(k² + m_A²) → |m_A|`:
/// `(ΔM)²/(π|m_A|) · [Λ − m_B arctan(Λ/m_B)]`.
pub fn closed_form_1d(m_a: f64, m_b: f64, cutoff: f64, delta_m: f64) -> Result<f64, AnalysisError> {
    if m_a == 0.0 || !m_a.is_finite() {
        return Err(AnalysisError::Mass);
    }
    let bracket = if m_b == 0.0 { cutoff } else { cutoff * one_minus_atan_ratio(cutoff / m_b) };
    Ok(delta_m * delta_m / (PI * m_a.abs()) * bracket)
}

/// 2D Dirac stored energy with `√(k² + m_A²) → |m_A|`:
/// `(ΔM)²/(4π|m_A|) · [Λ² − m_B² ln((Λ² + m_B²)/m_B²)]`.
pub fn closed_form_2d(m_a: f64, m_b: f64, cutoff: f64, delta_m: f64) -> Result<f64, AnalysisError> {
    if m_a == 0.0 || !m_a.is_finite() {
        return Err(AnalysisError::Mass);
    }
    let bracket = if m_b == 0.0 {
        cutoff * cutoff
    } else {
        let mb2 = m_b * m_b;
        let u = cutoff * cutoff / mb2;
        if u < 1.0 {
            mb2 * u_minus_log1p(u)
        } else {
            cutoff * cutoff - mb2 * u.ln_1p()
        }
    };
    Ok(delta_m * delta_m / (4.0 * PI * m_a.abs()) * bracket)
}
