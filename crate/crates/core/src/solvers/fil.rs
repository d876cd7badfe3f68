use nalgebra::DMatrix;

use super::linalg::solve_spd;
use super::{
    check_shapes, weights_from_freqs, Direction, FitProblem, Hyperparams, Mapping, MappingSolver, Method,
    SolverParams, WeightVector,
};
use crate::error::{Error, Result};
use crate::matrix::Design;

/// Frequency-weighted least squares, `(XᵀPX + λI) B = XᵀPY` with
/// `P = diag(p)`.
///
/// Equivalent to least squares on `√P·X`, `√P·Y`, and, for integer counts, to
/// least squares on the matrices with each row repeated by its count. The
/// weighted products are accumulated directly, so a sparse design stays
/// sparse.
pub fn solve_fil(design: &dyn Design, target: &DMatrix<f64>, weights: &WeightVector, ridge: f64) -> Result<Mapping> {
    check_shapes(design, target)?;
    let p = &weights.values;
    if p.len() != design.nrows() {
        return Err(Error::Dimension(format!("{} weights for {} rows", p.len(), design.nrows())));
    }
    if p.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Validation("weights must be finite and non-negative".into()));
    }
    if p.iter().all(|&w| w == 0.0) {
        return Err(Error::Validation("all weights are zero".into()));
    }
    let gram = design.weighted_gram(Some(p));
    let cross = design.weighted_cross(Some(p), target);
    let solved = solve_spd(gram, cross, ridge)?;
    let mapping = Mapping {
        data: solved.solution,
        method: Method::FrequencyInformed,
        direction: Direction::Comprehension,
        hyperparams: Hyperparams {
            ridge,
            jitter: solved.jitter,
            transform: Some(weights.transform),
            ..Hyperparams::default()
        },
    };
    mapping.check_finite()?;
    Ok(mapping)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FrequencyInformedSolver;

impl MappingSolver for FrequencyInformedSolver {
    fn name(&self) -> &'static str {
        "fil"
    }

    fn description(&self) -> &'static str {
        "frequency-informed learning: frequency-weighted least squares"
    }

    fn fit(&self, problem: &FitProblem<'_>, params: &SolverParams) -> Result<Mapping> {
        let counted;
        let freqs = match (problem.frequencies, problem.stream) {
            (Some(f), _) => f,
            (None, Some(stream)) => {
                counted = stream.counts(problem.design.nrows());
                &counted
            }
            (None, None) => return Err(Error::Validation("fil needs word frequencies or an event stream".into())),
        };
        let weights = weights_from_freqs(freqs, params.transform)?;
        let mut mapping = solve_fil(problem.design, problem.target, &weights, params.ridge)?;
        mapping.direction = problem.direction;
        Ok(mapping)
    }
}
