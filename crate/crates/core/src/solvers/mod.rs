//! Estimation of the linear maps between form and meaning.
//!
//! Every estimator implements [`MappingSolver`] and is looked up by name in a
//! [`SolverRegistry`]: `el` (least squares on the normal equations), `fil`
//! (frequency-weighted least squares) and `whl` (incremental Widrow-Hoff
//! updates over an event stream). The free functions underneath
//! ([`solve_endstate`], [`solve_fil`], [`train_whl`]) are usable directly.

mod endstate;
mod fil;
mod io;
pub mod linalg;
mod registry;
mod weights;
mod whl;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::cues::CueMatrix;
use crate::data::EventStream;
use crate::error::{Error, Result};
use crate::matrix::{Design, SemanticMatrix};

pub use endstate::{solve_endstate, EndstateSolver};
pub use fil::{solve_fil, FrequencyInformedSolver};
pub use io::{load_mapping, save_mapping};
pub use registry::SolverRegistry;
pub use weights::{weights_from_freqs, WeightTransform, WeightVector};
pub use whl::{train_whl, Checkpoint, WhlInit, WhlLearner, WhlOutcome, WidrowHoffSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Endstate,
    FrequencyInformed,
    WidrowHoff,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Endstate => "el",
            Method::FrequencyInformed => "fil",
            Method::WidrowHoff => "whl",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "el" => Ok(Method::Endstate),
            "fil" => Ok(Method::FrequencyInformed),
            "whl" => Ok(Method::WidrowHoff),
            other => Err(Error::UnknownSolver(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Cues to semantics, `Ŝ = CF`.
    Comprehension,
    /// Semantics to cues, `Ĉ = SG`.
    Production,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Comprehension => "comprehension",
            Direction::Production => "production",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "comprehension" => Ok(Direction::Comprehension),
            "production" => Ok(Direction::Production),
            other => Err(Error::Validation(format!("unknown direction `{other}`"))),
        }
    }
}

/// Settings a mapping was estimated with.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Hyperparams {
    pub ridge: f64,
    /// Automatic ridge added because the gram matrix was singular.
    pub jitter: Option<f64>,
    pub transform: Option<WeightTransform>,
    pub eta: Option<f64>,
    pub events: Option<usize>,
}

/// An estimated mapping matrix: `r × q` for comprehension, `q × r` for
/// production.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    pub data: DMatrix<f64>,
    pub method: Method,
    pub direction: Direction,
    pub hyperparams: Hyperparams,
}

impl Mapping {
    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("{} mapping", self.method)))
        }
    }
}

/// `X · mapping`: predicted semantics (or cues) for every row of `input`.
pub fn predict(input: &dyn Design, mapping: &Mapping) -> Result<DMatrix<f64>> {
    if input.ncols() != mapping.nrows() {
        return Err(Error::Dimension(format!(
            "input has {} columns, mapping has {} rows",
            input.ncols(),
            mapping.nrows()
        )));
    }
    Ok(input.multiply(&mapping.data))
}

/// Prediction for a single row vector.
pub fn predict_row(row: &[f64], mapping: &Mapping) -> Result<Vec<f64>> {
    if row.len() != mapping.nrows() {
        return Err(Error::Dimension(format!("row has {} entries, mapping has {} rows", row.len(), mapping.nrows())));
    }
    Ok((0..mapping.ncols()).map(|k| row.iter().enumerate().map(|(j, x)| x * mapping.data[(j, k)]).sum()).collect())
}

/// Everything a solver may need to estimate one mapping.
#[derive(Clone, Copy)]
pub struct FitProblem<'a> {
    pub design: &'a dyn Design,
    pub target: &'a DMatrix<f64>,
    pub direction: Direction,
    /// Token frequency per row; used by `fil`, and by `whl` when no stream is given.
    pub frequencies: Option<&'a [u64]>,
    /// Ordered learning events for `whl`.
    pub stream: Option<&'a EventStream>,
}

impl<'a> FitProblem<'a> {
    pub fn new(design: &'a dyn Design, target: &'a DMatrix<f64>) -> Self {
        FitProblem { design, target, direction: Direction::Comprehension, frequencies: None, stream: None }
    }

    pub fn frequencies(mut self, freqs: &'a [u64]) -> Self {
        self.frequencies = Some(freqs);
        self
    }

    pub fn stream(mut self, stream: &'a EventStream) -> Self {
        self.stream = Some(stream);
        self
    }

    pub fn direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub ridge: f64,
    pub transform: WeightTransform,
    pub eta: f64,
    /// Shuffle seed when `whl` expands frequencies into events itself.
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { ridge: 0.0, transform: WeightTransform::Raw, eta: 0.01, seed: 1 }
    }
}

/// A named mapping estimator.
pub trait MappingSolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn fit(&self, problem: &FitProblem<'_>, params: &SolverParams) -> Result<Mapping>;
}

/// Production mapping `G` with `SG ≈ C`, estimated by any solver.
pub fn solve_production(
    semantics: &SemanticMatrix,
    cues: &CueMatrix,
    solver: &dyn MappingSolver,
    params: &SolverParams,
    frequencies: Option<&[u64]>,
    stream: Option<&EventStream>,
) -> Result<Mapping> {
    let target = cues.to_dense();
    let problem = FitProblem {
        design: semantics,
        target: &target,
        direction: Direction::Production,
        frequencies,
        stream,
    };
    solver.fit(&problem, params)
}

pub(crate) fn check_shapes(design: &dyn Design, target: &DMatrix<f64>) -> Result<()> {
    if design.nrows() != target.nrows() {
        return Err(Error::Dimension(format!(
            "design has {} rows, target has {}",
            design.nrows(),
            target.nrows()
        )));
    }
    if design.nrows() == 0 {
        return Err(Error::Validation("no rows to fit".into()));
    }
    if !design.all_finite() {
        return Err(Error::NonFinite("design matrix".into()));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("target matrix".into()));
    }
    Ok(())
}
