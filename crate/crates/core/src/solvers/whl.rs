use nalgebra::DMatrix;

use super::{check_shapes, Direction, FitProblem, Hyperparams, Mapping, MappingSolver, Method, SolverParams};
use crate::data::{expand_counts, EventStream, ShufflePolicy};
use crate::error::{Error, Result};
use crate::eval::target_correlations;
use crate::matrix::Design;

/// Starting state for incremental learning.
#[derive(Debug, Clone, Copy)]
pub enum WhlInit<'m> {
    Zeros,
    Given(&'m Mapping),
}

/// Per-word target correlations after `event_index` events.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub event_index: usize,
    pub correlations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct WhlOutcome {
    pub mapping: Mapping,
    pub checkpoints: Option<Vec<Checkpoint>>,
}

/// Widrow-Hoff learner: `W ← W + η · xᵀ (y − xW)` for one event at a time.
///
/// The weights are kept row-major so an event touches only the rows of its
/// nonzero inputs, which for a cue row costs `O(nnz · q)`.
pub struct WhlLearner<'a> {
    design: &'a dyn Design,
    target: &'a DMatrix<f64>,
    eta: f64,
    weights: Vec<f64>,
    width: usize,
    row: Vec<(usize, f64)>,
    error: Vec<f64>,
    events: usize,
}

impl<'a> WhlLearner<'a> {
    pub fn new(design: &'a dyn Design, target: &'a DMatrix<f64>, eta: f64, init: WhlInit<'_>) -> Result<Self> {
        check_shapes(design, target)?;
        if eta <= 0.0 || !eta.is_finite() {
            return Err(Error::Validation(format!("learning rate must be positive, got {eta}")));
        }
        let (a, b) = (design.ncols(), target.ncols());
        let weights = match init {
            WhlInit::Zeros => vec![0.0; a * b],
            WhlInit::Given(m) => {
                if m.nrows() != a || m.ncols() != b {
                    return Err(Error::Dimension(format!(
                        "initial mapping is {}x{}, expected {a}x{b}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                m.check_finite()?;
                (0..a).flat_map(|j| (0..b).map(move |k| (j, k))).map(|(j, k)| m.data[(j, k)]).collect()
            }
        };
        Ok(WhlLearner { design, target, eta, weights, width: b, row: Vec::new(), error: vec![0.0; b], events: 0 })
    }

    /// Events applied so far.
    pub fn events(&self) -> usize {
        self.events
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Presents word `id` once.
    pub fn step(&mut self, id: usize) -> Result<()> {
        let step = self.events;
        if id >= self.design.nrows() {
            return Err(Error::Validation(format!("event {step} refers to row {id} of {}", self.design.nrows())));
        }
        let b = self.width;
        self.design.row_into(id, &mut self.row);
        for (k, e) in self.error.iter_mut().enumerate() {
            *e = self.target[(id, k)];
        }
        for &(j, x) in &self.row {
            let w = &self.weights[j * b..(j + 1) * b];
            for (e, wk) in self.error.iter_mut().zip(w) {
                *e -= x * wk;
            }
        }
        for e in &mut self.error {
            *e *= self.eta;
        }
        for &(j, x) in &self.row {
            let w = &mut self.weights[j * b..(j + 1) * b];
            for (wk, e) in w.iter_mut().zip(&self.error) {
                *wk += x * e;
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { step });
            }
        }
        self.events += 1;
        Ok(())
    }

    pub fn mapping_data(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.design.ncols(), self.width, &self.weights)
    }

    /// Target correlations of the current predictions for every word.
    pub fn correlations(&self) -> Result<Vec<f64>> {
        let predicted = self.design.multiply(&self.mapping_data());
        Ok(target_correlations(&predicted, self.target)?.values)
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        Ok(Checkpoint { event_index: self.events, correlations: self.correlations()? })
    }

    pub fn into_mapping(self) -> Mapping {
        Mapping {
            data: self.mapping_data(),
            method: Method::WidrowHoff,
            direction: Direction::Comprehension,
            hyperparams: Hyperparams { eta: Some(self.eta), events: Some(self.events), ..Hyperparams::default() },
        }
    }
}

/// Runs the Widrow-Hoff rule over `stream` in order. With `checkpoint_every`
/// set, records target correlations every that many events and at the end.
pub fn train_whl(
    design: &dyn Design,
    target: &DMatrix<f64>,
    stream: &EventStream,
    eta: f64,
    init: WhlInit<'_>,
    checkpoint_every: Option<usize>,
) -> Result<WhlOutcome> {
    if stream.is_empty() {
        return Err(Error::Validation("event stream is empty".into()));
    }
    if checkpoint_every == Some(0) {
        return Err(Error::Validation("checkpoint interval must be at least 1".into()));
    }
    let mut learner = WhlLearner::new(design, target, eta, init)?;
    let mut checkpoints = checkpoint_every.map(|_| Vec::new());
    for &id in stream.ids() {
        learner.step(id)?;
        if let (Some(every), Some(cps)) = (checkpoint_every, checkpoints.as_mut()) {
            if learner.events() % every == 0 || learner.events() == stream.len() {
                cps.push(learner.checkpoint()?);
            }
        }
    }
    Ok(WhlOutcome { mapping: learner.into_mapping(), checkpoints })
}

#[derive(Debug, Default, Clone, Copy)]
pub struct WidrowHoffSolver;

impl MappingSolver for WidrowHoffSolver {
    fn name(&self) -> &'static str {
        "whl"
    }

    fn description(&self) -> &'static str {
        "Widrow-Hoff learning: incremental error-driven updates over an event stream"
    }

    /// Uses the problem's stream when present; otherwise expands the
    /// transformed frequencies (one event per word without frequencies) into
    /// a shuffled stream seeded by `params.seed`.
    fn fit(&self, problem: &FitProblem<'_>, params: &SolverParams) -> Result<Mapping> {
        let m = problem.design.nrows();
        let (expanded, transform) = match problem.stream {
            Some(_) => (None, None),
            None => {
                let counts: Vec<u64> = match problem.frequencies {
                    Some(f) => f.iter().map(|&f| params.transform.event_count(f)).collect(),
                    None => vec![1; m],
                };
                (Some(expand_counts(&counts, ShufflePolicy::SeededShuffle, params.seed)?), Some(params.transform))
            }
        };
        let stream = problem.stream.or(expanded.as_ref()).expect("stream present");
        let mut mapping =
            train_whl(problem.design, problem.target, stream, params.eta, WhlInit::Zeros, None)?.mapping;
        mapping.direction = problem.direction;
        mapping.hyperparams.transform = transform;
        Ok(mapping)
    }
}
