use nalgebra::DMatrix;

use super::linalg::solve_spd;
use super::{check_shapes, Direction, FitProblem, Hyperparams, Mapping, MappingSolver, Method, SolverParams};
use crate::error::Result;
use crate::matrix::Design;

/// Least-squares mapping from the normal equations `(XᵀX + λI) B = XᵀY`.
pub fn solve_endstate(design: &dyn Design, target: &DMatrix<f64>, ridge: f64) -> Result<Mapping> {
    check_shapes(design, target)?;
    let gram = design.weighted_gram(None);
    let cross = design.weighted_cross(None, target);
    let solved = solve_spd(gram, cross, ridge)?;
    let mapping = Mapping {
        data: solved.solution,
        method: Method::Endstate,
        direction: Direction::Comprehension,
        hyperparams: Hyperparams { ridge, jitter: solved.jitter, ..Hyperparams::default() },
    };
    mapping.check_finite()?;
    Ok(mapping)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct EndstateSolver;

impl MappingSolver for EndstateSolver {
    fn name(&self) -> &'static str {
        "el"
    }

    fn description(&self) -> &'static str {
        "endstate learning: frequency-blind least squares"
    }

    fn fit(&self, problem: &FitProblem<'_>, params: &SolverParams) -> Result<Mapping> {
        let mut mapping = solve_endstate(problem.design, problem.target, params.ridge)?;
        mapping.direction = problem.direction;
        Ok(mapping)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_returns_target() {
        let x = DMatrix::<f64>::identity(3, 3);
        let y = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 0.5, 3.0, 7.0, 0.0]);
        let f = solve_endstate(&x, &y, 0.0).unwrap();
        assert!((f.data - &y).abs().max() < 1e-14);
    }

    #[test]
    fn hand_solved_two_by_two() {
        // XᵀX = [[2,1],[1,1]], XᵀY = [[4],[3]]  =>  B = [[1],[2]]
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let y = DMatrix::from_row_slice(2, 1, &[1.0, 3.0]);
        let f = solve_endstate(&x, &y, 0.0).unwrap();
        assert!((f.data[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((f.data[(1, 0)] - 2.0).abs() < 1e-12);
        assert!((&x * &f.data - &y).abs().max() < 1e-12);
        assert!(f.hyperparams.jitter.is_none());
    }

    #[test]
    fn duplicate_columns_fall_back_to_jitter() {
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let y = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.3, 0.3]);
        let f = solve_endstate(&x, &y, 0.0).unwrap();
        assert!(f.hyperparams.jitter.is_some());
        // independent oracle: minimum-norm least squares through the SVD
        let pinv = x.clone().svd(true, true).pseudo_inverse(1e-12).unwrap();
        let oracle = &x * (&pinv * &y);
        assert!((&x * &f.data - oracle).abs().max() < 1e-6);
        let res = (&x * &f.data - &y).norm_squared();
        let res_oracle = (&x * (&pinv * &y) - &y).norm_squared();
        assert!((res - res_oracle).abs() < 1e-6);
    }

    #[test]
    fn ridge_shrinks() {
        let x = DMatrix::<f64>::identity(2, 2);
        let y = DMatrix::from_row_slice(2, 1, &[2.0, 4.0]);
        let f = solve_endstate(&x, &y, 1.0).unwrap();
        assert!((f.data[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((f.data[(1, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_mismatch() {
        let x = DMatrix::from_row_slice(1, 1, &[f64::INFINITY]);
        let y = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(solve_endstate(&x, &y, 0.0).is_err());
        let x = DMatrix::<f64>::identity(2, 2);
        assert!(solve_endstate(&x, &y, 0.0).is_err());
    }
}
