//! Symmetric positive-definite solves for the normal equations.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest diagonal entry count as zero.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Jitter added to a singular gram matrix, relative to its mean diagonal.
pub const JITTER_SCALE: f64 = 1e-8;

#[derive(Debug)]
pub struct SpdSolution {
    pub solution: DMatrix<f64>,
    /// Ridge added automatically because the unregularized system was singular.
    pub jitter: Option<f64>,
}

fn factor(mut gram: DMatrix<f64>, ridge: f64) -> Option<Cholesky<f64, Dyn>> {
    let max_diag = gram.diagonal().iter().copied().fold(0.0, f64::max);
    if ridge > 0.0 {
        for i in 0..gram.nrows() {
            gram[(i, i)] += ridge;
        }
    }
    let chol = Cholesky::new(gram)?;
    let floor = PIVOT_TOLERANCE * (max_diag + ridge);
    chol.l_dirty().diagonal().iter().all(|&d| d * d > floor).then_some(chol)
}

/// Solves `(A + ridge·I) B = rhs` for symmetric `A` by Cholesky. When
/// `ridge == 0` and `A` is singular, retries once with a jitter of
/// `1e-8 · trace(A) / n`.
pub fn solve_spd(gram: DMatrix<f64>, rhs: DMatrix<f64>, ridge: f64) -> Result<SpdSolution> {
    let n = gram.nrows();
    if gram.ncols() != n || rhs.nrows() != n {
        return Err(Error::Dimension(format!("gram {}x{} vs rhs {}x{}", n, gram.ncols(), rhs.nrows(), rhs.ncols())));
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::Validation(format!("ridge must be a finite non-negative number, got {ridge}")));
    }
    if n == 0 {
        return Ok(SpdSolution { solution: rhs, jitter: None });
    }
    let trace = gram.trace();
    let (chol, jitter) = match factor(gram.clone(), ridge) {
        Some(chol) => (chol, None),
        None if ridge == 0.0 => {
            let jitter = JITTER_SCALE * trace / n as f64;
            if jitter.is_nan() || jitter <= 0.0 {
                return Err(Error::Factorization("gram matrix is zero".into()));
            }
            let chol = factor(gram, jitter)
                .ok_or_else(|| Error::Factorization(format!("singular even with jitter {jitter:e}")))?;
            (chol, Some(jitter))
        }
        None => return Err(Error::Factorization(format!("not positive definite with ridge {ridge:e}"))),
    };
    let solution = chol.solve(&rhs);
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("normal-equation solution".into()));
    }
    Ok(SpdSolution { solution, jitter })
}
