//! Parameter scans driven by a JSON run configuration.
//!
//! A scan evaluates the stored energy on a cell-centred grid of the scanned
//! coupling, differentiates it, runs the requested singularity analyses and
//! renders a CSV dataset plus a JSON summary. Nothing is written until every
//! step has succeeded.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criticality::{
    central_derivative, estimate_jump_with, fit_log_divergence, locate_jump, locate_log_divergence, predicted_jump,
    predicted_log_coefficient, refine_jump, AnalysisError, JumpOptions, JumpRefinement, ParamScan, RefineError,
    SingularityReport,
};
use crate::kernel::EnergyConvention;
use crate::models::{critical_t2, ising_energy_with, HaldaneParams, HaldaneTable, ModelError};
use crate::quadrature::{Parallelism, QuadratureError, RadialIntegrand, RadialShell};

pub const MIN_STEPS: usize = 8;
pub const DEFAULT_ISING_GRID: usize = 8192;
pub const DEFAULT_HALDANE_GRID: usize = 256;
pub const CSV_HEADER: &str = "x,energy,d1_energy,d2_energy,dropped_modes";

/// Half-width, in scan steps, of the search around a predicted critical point.
const SEARCH_HALF_WIDTH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dirac1d,
    Dirac2d,
    Ising,
    Haldane,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dirac1d => "dirac1d",
            ModelKind::Dirac2d => "dirac2d",
            ModelKind::Ising => "ising",
            ModelKind::Haldane => "haldane",
        }
    }

    fn dirac_dim(self) -> Option<u32> {
        match self {
            ModelKind::Dirac1d => Some(1),
            ModelKind::Dirac2d => Some(2),
            _ => None,
        }
    }
}

/// `steps` cells of width `(stop − start)/steps`, sampled at their centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl ScanRange {
    pub fn step(&self) -> f64 {
        (self.stop - self.start) / self.steps as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + (i as f64 + 0.5) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.point(i)).collect()
    }
}

fn default_t1() -> f64 {
    1.0
}
fn default_m() -> f64 {
    1.0
}
fn default_a() -> f64 {
    1.0
}
fn default_cutoff() -> f64 {
    10.0
}
fn default_panels() -> usize {
    512
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default = "default_t1")]
    pub t1: f64,
    #[serde(default = "default_m")]
    pub m: f64,
    /// Lattice constant.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Momentum cutoff `Λ` of the Dirac shell.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_panels")]
    pub panels: usize,
    /// Momenta per lattice direction; model default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default)]
    pub integrand: RadialIntegrand,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            t1: default_t1(),
            m: default_m(),
            a: default_a(),
            cutoff: default_cutoff(),
            panels: default_panels(),
            grid: None,
            integrand: RadialIntegrand::default(),
        }
    }
}

fn default_one() -> u32 {
    1
}
fn default_two() -> u32 {
    2
}
fn default_exclusion() -> usize {
    JumpOptions::default().exclusion
}
fn default_window() -> usize {
    JumpOptions::default().window
}

/// One requested singularity analysis. Without `location` or `search` the
/// analysis runs at every predicted critical point inside the scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisSpec {
    Jump {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        location: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        search: Option<[f64; 2]>,
        #[serde(default = "default_one")]
        order: u32,
        #[serde(default = "default_exclusion")]
        exclusion: usize,
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default)]
        step_halving: bool,
    },
    LogDivergence {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        location: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        search: Option<[f64; 2]>,
        #[serde(default = "default_two")]
        order: u32,
        /// `[r_min, r_max]`; defaults to `[2h, 50h]`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

/// A single scan request.
///
/// The scanned coupling `x` and the quench increment `delta` mean:
/// `dirac1d`/`dirac2d`: `m_A = x`, `m_B = x + delta`;
/// `ising`: `h₀ = x`, `h₁ = delta`;
/// `haldane`: `t₂^(A) = x`, `t₂ → x + delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub scan: ScanRange,
    pub delta: f64,
    #[serde(default)]
    pub constants: Constants,
    /// Haldane only: repeat the scan for each `t₁`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_series: Option<Vec<f64>>,
    /// Haldane only: finite charging time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub convention: EnergyConvention,
    #[serde(default)]
    pub analysis: Vec<AnalysisSpec>,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numeric failure at x = {x}: {message}")]
    Numeric { x: f64, message: String },
    #[error("analysis failed: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl ScanError {
    /// 2 for anything the configuration determines, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScanError::Validation(_) | ScanError::Analysis(_) => 2,
            ScanError::Numeric { .. } | ScanError::Io { .. } => 1,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ScanError {
    ScanError::Validation(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ScanError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, ScanError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScanError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    /// Makes relative output paths relative to `dir`.
    pub fn resolve_outputs(&mut self, dir: &Path) {
        for p in [&mut self.output.csv, &mut self.output.report].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn grid(&self) -> usize {
        self.constants.grid.unwrap_or(match self.model {
            ModelKind::Haldane => DEFAULT_HALDANE_GRID,
            _ => DEFAULT_ISING_GRID,
        })
    }

    /// `t₁` of each series; a single entry unless `t1_series` is set.
    pub fn t1_values(&self) -> Vec<f64> {
        self.t1_series.clone().unwrap_or_else(|| vec![self.constants.t1])
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        let s = &self.scan;
        if !(s.start.is_finite() && s.stop.is_finite()) || s.start >= s.stop {
            return Err(invalid(format!("scan needs finite start < stop, got [{}, {}]", s.start, s.stop)));
        }
        if s.steps < MIN_STEPS {
            return Err(invalid(format!("scan needs at least {MIN_STEPS} steps, got {}", s.steps)));
        }
        if !self.delta.is_finite() || self.delta == 0.0 {
            return Err(invalid("delta must be finite and non-zero"));
        }
        let c = &self.constants;
        for (name, v) in [("t1", c.t1), ("m", c.m), ("a", c.a), ("cutoff", c.cutoff)] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        if self.model != ModelKind::Haldane {
            if self.t1_series.is_some() {
                return Err(invalid("t1_series applies to the haldane model only"));
            }
            if self.tau.is_some() {
                return Err(invalid("finite tau is supported for the haldane model only"));
            }
        }
        match self.model {
            ModelKind::Dirac1d | ModelKind::Dirac2d => {
                if c.cutoff <= 0.0 {
                    return Err(invalid("cutoff must be positive"));
                }
                if c.panels < 16 {
                    return Err(invalid("panels must be at least 16"));
                }
                if self.convention != EnergyConvention::PerMode {
                    return Err(invalid("the continuum Dirac models have no raw_sum normalization"));
                }
                if let Some(x) = s.points().into_iter().find(|&x| x == 0.0) {
                    return Err(invalid(format!("scan samples the gapless pre-quench mass m_A = {x}")));
                }
            }
            ModelKind::Ising => {
                if self.grid() < 2 {
                    return Err(invalid("grid must hold at least 2 momenta"));
                }
            }
            ModelKind::Haldane => {
                if c.a <= 0.0 {
                    return Err(invalid("lattice constant must be positive"));
                }
                if self.grid() < 2 {
                    return Err(invalid("grid must hold at least 2 momenta per direction"));
                }
                if let Some(series) = &self.t1_series {
                    if series.is_empty() || series.iter().any(|t| !t.is_finite()) {
                        return Err(invalid("t1_series must be a non-empty list of finite values"));
                    }
                }
                if let Some(t) = self.tau {
                    if !t.is_finite() || t < 0.0 {
                        return Err(invalid("tau must be finite and non-negative"));
                    }
                }
            }
        }
        for spec in &self.analysis {
            let (location, search, order) = match spec {
                AnalysisSpec::Jump { location, search, order, exclusion, window, .. } => {
                    if *exclusion < 1 || *window < 2 {
                        return Err(invalid("jump analysis needs exclusion >= 1 and window >= 2"));
                    }
                    (location, search, order)
                }
                AnalysisSpec::LogDivergence { location, search, order, window } => {
                    if let Some([lo, hi]) = window {
                        if !(0.0 <= *lo && lo < hi) {
                            return Err(invalid("log window must satisfy 0 <= r_min < r_max"));
                        }
                    }
                    (location, search, order)
                }
            };
            if *order != 1 && *order != 2 {
                return Err(invalid(format!("derivative order {order} is not supported")));
            }
            if let Some(x) = location {
                if !(*x > s.start && *x < s.stop) {
                    return Err(invalid(format!("analysis location {x} is outside the scan")));
                }
            }
            if let Some([lo, hi]) = search {
                if !(lo < hi) {
                    return Err(invalid(format!("search interval [{lo}, {hi}] is empty")));
                }
            }
        }
        Ok(())
    }

    /// Values of the scanned coupling where the evolution Hamiltonian is
    /// gapless.
    pub fn critical_points(&self) -> Vec<f64> {
        let d = self.delta;
        match self.model {
            ModelKind::Dirac1d | ModelKind::Dirac2d => vec![-d],
            ModelKind::Ising => vec![-1.0 - d, 1.0 - d],
            ModelKind::Haldane => {
                let t2c = critical_t2(self.constants.m);
                let mut v = vec![-t2c - d, t2c - d];
                v.sort_by(f64::total_cmp);
                v
            }
        }
    }
}

/// Energy at one value of the scanned coupling.
enum Evaluator {
    Dirac { shell: RadialShell, delta: f64, integrand: RadialIntegrand },
    Ising { h1: f64, n_k: usize, convention: EnergyConvention },
    Haldane { table: HaldaneTable, t1: f64, m: f64, delta: f64, tau: Option<f64>, convention: EnergyConvention },
}

#[derive(Debug, Error)]
enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("energy is not finite ({0})")]
    NonFinite(f64),
}

impl Evaluator {
    fn energy(&self, x: f64) -> Result<(f64, usize), EvalError> {
        let (e, dropped) = match self {
            Evaluator::Dirac { shell, delta, integrand } => (shell.energy(x, x + delta, -delta, *integrand)?, 0),
            Evaluator::Ising { h1, n_k, convention } => {
                let t = ising_energy_with(x, *h1, *n_k, *convention, Parallelism::Parallel)?;
                (t.energy, t.dropped_modes)
            }
            Evaluator::Haldane { table, t1, m, delta, tau, convention } => {
                let t = table.quench_energy(*t1, *m, x, *delta, *tau, *convention, Parallelism::Parallel)?;
                (t.energy, t.dropped_modes)
            }
        };
        if e.is_finite() {
            Ok((e, dropped))
        } else {
            Err(EvalError::NonFinite(e))
        }
    }

    fn evaluate_all(&self, xs: &[f64]) -> Result<Vec<(f64, usize)>, ScanError> {
        let one = |&x: &f64| self.energy(x).map_err(|e| ScanError::Numeric { x, message: e.to_string() });
        match self {
            // Cheap per point: parallelize across the scan, then report the
            // first failure in scan order.
            Evaluator::Dirac { .. } => xs.par_iter().map(one).collect::<Vec<_>>().into_iter().collect(),
            // Each point is already a parallel reduction.
            _ => xs.iter().map(one).collect(),
        }
    }
}

/// A singularity analysis result as it appears in the summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    /// Order of the analysed derivative.
    pub derivative: u32,
    #[serde(flatten)]
    pub report: SingularityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_halving: Option<JumpRefinement>,
    /// For log fits, whether the log model beats a straight line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected: Option<bool>,
}

/// One scanned curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub t1: Option<f64>,
    pub energy: ParamScan,
    pub dropped_modes: Vec<usize>,
    pub d1: ParamScan,
    pub d2: ParamScan,
}

impl Series {
    /// CSV rendering with a header row, LF line endings and 17 significant
    /// digits; derivative cells are empty at the endpoints.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(96 * (self.energy.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        let last = self.energy.len() - 1;
        for (i, (x, e)) in self.energy.x().iter().zip(self.energy.y()).enumerate() {
            let (d1, d2) = if i == 0 || i == last {
                (String::new(), String::new())
            } else {
                (format!("{:.16e}", self.d1.y()[i - 1]), format!("{:.16e}", self.d2.y()[i - 1]))
            };
            out.push_str(&format!("{x:.16e},{e:.16e},{d1},{d2},{}\n", self.dropped_modes[i]));
        }
        out
    }

    pub fn max_energy(&self) -> f64 {
        self.energy.y().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Predictions {
    /// Scanned-coupling values at which the evolution Hamiltonian closes its gap.
    pub critical_points: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump: Option<f64>,
    /// Jump the generic kernel normalization gives for the Ising chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump_generic_kernel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_coefficient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrandComparison {
    /// Largest `|E_full − E_simplified| / |E_simplified|` over the scan.
    pub max_relative_difference: f64,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub dropped_modes: usize,
    pub scan_points: usize,
    pub scan_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momenta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_side: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panels: Option<usize>,
    /// Relative change of the energy at the scan midpoint when the panel
    /// count doubles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel_doubling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrand_comparison: Option<IntegrandComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub model: &'static str,
    pub config: RunConfig,
    pub singularities: Vec<SingularityEntry>,
    pub predictions: Predictions,
    pub diagnostics: Diagnostics,
}

/// Everything a scan produces, before anything is written.
#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub series: Vec<Series>,
    pub summary: Summary,
}

fn build_evaluator(config: &RunConfig, t1: f64) -> Result<Evaluator, ScanError> {
    let c = &config.constants;
    Ok(match config.model {
        ModelKind::Dirac1d | ModelKind::Dirac2d => {
            let dim = config.model.dirac_dim().unwrap_or(1);
            let shell = RadialShell::new(dim, c.cutoff, c.panels).map_err(|e| invalid(e.to_string()))?;
            Evaluator::Dirac { shell, delta: config.delta, integrand: c.integrand }
        }
        ModelKind::Ising => Evaluator::Ising { h1: config.delta, n_k: config.grid(), convention: config.convention },
        ModelKind::Haldane => {
            HaldaneParams::with_lattice_constant(t1, 0.0, c.m, c.a).map_err(|e| invalid(e.to_string()))?;
            let table = HaldaneTable::new(config.grid(), c.a).map_err(|e| invalid(e.to_string()))?;
            Evaluator::Haldane {
                table,
                t1,
                m: c.m,
                delta: config.delta,
                tau: config.tau,
                convention: config.convention,
            }
        }
    })
}

fn analysis_targets(
    config: &RunConfig,
    location: Option<f64>,
    search: Option<[f64; 2]>,
    step: f64,
) -> Vec<(Option<f64>, Option<[f64; 2]>)> {
    if location.is_some() || search.is_some() {
        return vec![(location, search)];
    }
    let (lo, hi) = (config.scan.start, config.scan.stop);
    config
        .critical_points()
        .into_iter()
        .filter(|&x| x > lo && x < hi)
        .map(|x| (None, Some([x - SEARCH_HALF_WIDTH * step, x + SEARCH_HALF_WIDTH * step])))
        .collect()
}

fn analyse(config: &RunConfig, evaluator: &Evaluator, series: &Series) -> Result<Vec<SingularityEntry>, ScanError> {
    let step = config.scan.step();
    let mut entries = Vec::new();
    for spec in &config.analysis {
        match *spec {
            AnalysisSpec::Jump { location, search, order, exclusion, window, step_halving } => {
                let deriv = if order == 1 { &series.d1 } else { &series.d2 };
                let opts = JumpOptions { exclusion, window };
                for (loc, search) in analysis_targets(config, location, search, step) {
                    let x_c = match (loc, search) {
                        (Some(x), _) => x,
                        (None, Some([lo, hi])) => locate_jump(deriv, lo, hi)?,
                        (None, None) => unreachable!("targets carry a location or a search interval"),
                    };
                    let report = estimate_jump_with(deriv, x_c, opts)?;
                    let refinement = if step_halving && order == 1 {
                        let f = |x: f64| evaluator.energy(x).map(|(e, _)| e);
                        Some(refine_jump(f, x_c, step, opts).map_err(|e| match e {
                            RefineError::Energy { x, source } => ScanError::Numeric { x, message: source.to_string() },
                            RefineError::Analysis(a) => ScanError::Analysis(a),
                        })?)
                    } else {
                        None
                    };
                    entries.push(SingularityEntry {
                        t1: series.t1,
                        derivative: order,
                        report,
                        step_halving: refinement,
                        detected: None,
                    });
                }
            }
            AnalysisSpec::LogDivergence { location, search, order, window } => {
                let deriv = if order == 1 { &series.d1 } else { &series.d2 };
                let window = window.map(|[a, b]| (a, b)).unwrap_or((2.0 * step, 50.0 * step));
                for (loc, search) in analysis_targets(config, location, search, step) {
                    let report = match (loc, search) {
                        (Some(x), _) => fit_log_divergence(deriv, x, window)?,
                        (None, Some([lo, hi])) => locate_log_divergence(deriv, lo, hi, window)?,
                        (None, None) => unreachable!("targets carry a location or a search interval"),
                    };
                    let detected = Some(report.log_model_preferred());
                    entries.push(SingularityEntry {
                        t1: series.t1,
                        derivative: order,
                        report,
                        step_halving: None,
                        detected,
                    });
                }
            }
        }
    }
    Ok(entries)
}

fn predictions(config: &RunConfig) -> Predictions {
    let d = config.delta;
    let critical_points = config.critical_points();
    let mut p = Predictions { critical_points, jump: None, jump_generic_kernel: None, log_coefficient: None };
    match config.model {
        ModelKind::Dirac1d => p.jump = predicted_jump(1, d, d.abs()).ok(),
        ModelKind::Dirac2d => p.log_coefficient = predicted_log_coefficient(2, d).ok(),
        ModelKind::Ising => {
            let scale = match config.convention {
                EnergyConvention::PerMode => 1.0,
                EnergyConvention::RawSum => config.grid() as f64,
            };
            p.jump = Some(0.5 * d.abs() * scale);
            p.jump_generic_kernel = Some(d.abs() * scale);
        }
        ModelKind::Haldane => {}
    }
    p
}

/// Runs a validated configuration.
pub fn run(config: &RunConfig) -> Result<ScanOutcome, ScanError> {
    config.validate()?;
    let xs = config.scan.points();
    let step = config.scan.step();
    let mut series = Vec::new();
    let mut singularities = Vec::new();
    let mut comparison = None;
    let mut panel_doubling = None;
    let t1s = config.t1_values();
    for &t1 in &t1s {
        let evaluator = build_evaluator(config, t1)?;
        let values = evaluator.evaluate_all(&xs)?;
        let (ys, dropped): (Vec<f64>, Vec<usize>) = values.into_iter().unzip();
        let energy = ParamScan::new("energy", xs.clone(), ys)?;
        let s = Series {
            t1: config.t1_series.as_ref().map(|_| t1),
            d1: central_derivative(&energy, 1)?,
            d2: central_derivative(&energy, 2)?,
            energy,
            dropped_modes: dropped,
        };
        singularities.extend(analyse(config, &evaluator, &s)?);
        if let Evaluator::Dirac { shell, delta, integrand } = &evaluator {
            comparison = Some(compare_integrands(shell, *delta, &xs)?);
            let mid = xs[xs.len() / 4];
            let pd = shell
                .panel_doubling(mid, mid + delta, -delta, *integrand)
                .map_err(|e| ScanError::Numeric { x: mid, message: e.to_string() })?;
            panel_doubling = Some(pd.relative_change);
        }
        series.push(s);
    }
    let dirac = config.model.dirac_dim().is_some();
    let diagnostics = Diagnostics {
        dropped_modes: series.iter().flat_map(|s| &s.dropped_modes).sum(),
        scan_points: xs.len(),
        scan_step: step,
        momenta: match config.model {
            ModelKind::Ising => Some(config.grid()),
            ModelKind::Haldane => Some(config.grid() * config.grid()),
            _ => None,
        },
        grid_side: (config.model == ModelKind::Haldane).then(|| config.grid()),
        panels: dirac.then_some(config.constants.panels),
        panel_doubling,
        integrand_comparison: comparison,
    };
    let summary = Summary {
        model: config.model.name(),
        config: config.clone(),
        singularities,
        predictions: predictions(config),
        diagnostics,
    };
    Ok(ScanOutcome { series, summary })
}

fn compare_integrands(shell: &RadialShell, delta: f64, xs: &[f64]) -> Result<IntegrandComparison, ScanError> {
    let diffs: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let numeric = |e: QuadratureError| ScanError::Numeric { x, message: e.to_string() };
            let simple = shell.energy(x, x + delta, -delta, RadialIntegrand::Simplified).map_err(numeric)?;
            let full = shell.energy(x, x + delta, -delta, RadialIntegrand::Full).map_err(numeric)?;
            Ok((((full - simple) / simple).abs(), x))
        })
        .collect::<Result<_, ScanError>>()?;
    let (max_relative_difference, at) =
        diffs.into_iter().fold((0.0, xs[0]), |best, d| if d.0 > best.0 { d } else { best });
    Ok(IntegrandComparison { max_relative_difference, at })
}

/// Output file for a series: the configured path, or `<stem>.t1_<v>.<ext>`
/// when the scan has several series.
pub fn series_path(base: &Path, t1: Option<f64>) -> PathBuf {
    match t1 {
        None => base.to_path_buf(),
        Some(v) => {
            let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("scan");
            let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
            base.with_file_name(format!("{stem}.t1_{v}.{ext}"))
        }
    }
}

impl ScanOutcome {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).unwrap_or_else(|_| "{}".into());
        s.push('\n');
        s
    }

    /// Writes every CSV (to `csv`, or stdout when absent) and the summary.
    pub fn write(&self, csv: Option<&Path>, report: Option<&Path>) -> Result<Vec<PathBuf>, ScanError> {
        let mut written = Vec::new();
        let write_file = |path: &Path, body: &str| {
            std::fs::write(path, body).map_err(|source| ScanError::Io { path: path.into(), source })
        };
        match csv {
            Some(base) => {
                for s in &self.series {
                    let path = series_path(base, s.t1);
                    write_file(&path, &s.to_csv())?;
                    written.push(path);
                }
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                for s in &self.series {
                    lock.write_all(s.to_csv().as_bytes())
                        .map_err(|source| ScanError::Io { path: "<stdout>".into(), source })?;
                }
            }
        }
        if let Some(path) = report {
            write_file(path, &self.summary_json())?;
            written.push(path.to_path_buf());
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ising_json(extra: &str) -> String {
        format!(
            r#"{{"model":"ising","scan":{{"start":0.5,"stop":1.0,"steps":50}},"delta":0.25,"constants":{{"grid":512}}{extra}}}"#
        )
    }

    #[test]
    fn cell_centred_points_avoid_boundaries() {
        let r = ScanRange { start: 0.5, stop: 1.0, steps: 500 };
        let xs = r.points();
        assert_eq!(xs.len(), 500);
        assert!((xs[0] - 0.5005).abs() < 1e-15);
        assert!(xs.iter().all(|&x| (x - 0.75).abs() > 4e-4));
    }

    #[test]
    fn parses_defaults() {
        let c = RunConfig::from_json(&ising_json("")).unwrap();
        assert_eq!(c.convention, EnergyConvention::PerMode);
        assert_eq!(c.constants.cutoff, 10.0);
        assert_eq!(c.grid(), 512);
        assert_eq!(c.critical_points(), vec![-1.25, 0.75]);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{"model":"ising","scan":{"start":1.0,"stop":0.5,"steps":50},"delta":0.25}"#,
            r#"{"model":"ising","scan":{"start":0.5,"stop":1.0,"steps":4},"delta":0.25}"#,
            r#"{"model":"ising","scan":{"start":0.5,"stop":1.0,"steps":50},"delta":0.0}"#,
            r#"{"model":"ising","scan":{"start":0.5,"stop":1.0,"steps":50},"delta":0.1,"tau":3.0}"#,
            r#"{"model":"ising","scan":{"start":0.5,"stop":1.0,"steps":50},"delta":0.1,"bogus":1}"#,
            r#"{"model":"dirac1d","scan":{"start":-1.0,"stop":1.0,"steps":9},"delta":0.1}"#,
            r#"{"model":"lattice","scan":{"start":0.5,"stop":1.0,"steps":50},"delta":0.1}"#,
        ] {
            let err = RunConfig::from_json(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
        let outside = ising_json(r#","analysis":[{"kind":"jump","location":2.0}]"#);
        assert_eq!(RunConfig::from_json(&outside).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn ising_scan_finds_jump_and_renders_csv() {
        let c = RunConfig::from_json(&ising_json(r#","analysis":[{"kind":"jump"}]"#)).unwrap();
        let out = run(&c).unwrap();
        assert_eq!(out.series.len(), 1);
        let csv = out.series[0].to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 51);
        assert!(lines[1].ends_with(",,,0"));
        assert!(!csv.contains('\r'));
        let s = &out.summary.singularities[0];
        assert!((s.report.location() - 0.75).abs() < 0.011);
        assert!((s.report.magnitude().unwrap() - 0.125).abs() < 0.01, "{s:?}");
    }

    #[test]
    fn series_paths() {
        let base = Path::new("out/energy.csv");
        assert_eq!(series_path(base, None), PathBuf::from("out/energy.csv"));
        assert_eq!(series_path(base, Some(0.5)), PathBuf::from("out/energy.t1_0.5.csv"));
    }
}
