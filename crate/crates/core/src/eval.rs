//! Scoring of predicted semantic vectors.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix2, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Design;
use crate::solvers::{predict_row, Mapping};

/// Predicted rows scored per evaluation block.
const BLOCK: usize = 256;

/// Per-word Pearson correlations between predicted and target rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlations {
    pub values: Vec<f64>,
    /// Set where either row had zero variance; the correlation is then 0.
    pub degenerate: Vec<bool>,
}

/// Centers `row` and scales it to unit length. Returns `false` (and leaves a
/// zero vector) for a constant row.
fn standardize(row: &mut [f64]) -> bool {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in row.iter_mut() {
        *v -= mean;
    }
    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || norm <= 1e-12 * scale * n.sqrt() {
        row.iter_mut().for_each(|v| *v = 0.0);
        return false;
    }
    row.iter_mut().for_each(|v| *v /= norm);
    true
}

/// Row-major standardized copy of `m`, with per-row validity flags.
fn standardized_rows(m: &DMatrix<f64>) -> (Vec<f64>, Vec<bool>) {
    let (rows, q) = m.shape();
    let mut out = vec![0.0; rows * q];
    let mut ok = vec![false; rows];
    out.par_chunks_mut(q.max(1)).zip(ok.par_iter_mut()).enumerate().for_each(|(i, (row, flag))| {
        for (k, v) in row.iter_mut().enumerate() {
            *v = m[(i, k)];
        }
        *flag = standardize(row);
    });
    (out, ok)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_pair(predicted: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<()> {
    if predicted.shape() != target.shape() {
        return Err(Error::Dimension(format!(
            "predicted {:?} vs target {:?}",
            predicted.shape(),
            target.shape()
        )));
    }
    if target.ncols() < 2 {
        return Err(Error::Validation("correlation needs at least 2 dimensions".into()));
    }
    Ok(())
}

/// Correlation of each predicted row with its own target row.
pub fn target_correlations(predicted: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<Correlations> {
    check_pair(predicted, target)?;
    let q = target.ncols();
    let (zp, okp) = standardized_rows(predicted);
    let (zt, okt) = standardized_rows(target);
    let values = (0..target.nrows()).map(|i| dot(&zp[i * q..(i + 1) * q], &zt[i * q..(i + 1) * q])).collect();
    let degenerate = okp.iter().zip(&okt).map(|(a, b)| !(a & b)).collect();
    Ok(Correlations { values, degenerate })
}

/// Simulated response latency `1 - r` per word.
pub fn rt_measure(predicted: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(target_correlations(predicted, target)?.values.into_iter().map(|r| 1.0 - r).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordScore {
    pub target_r: f64,
    /// Position of the word's own target among all targets, 1-based, ordered
    /// by correlation with the prediction; ties go to the lower row index.
    pub rank: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub words: Vec<WordScore>,
    pub k_list: Vec<usize>,
    /// Fraction of words correct at each k.
    pub type_accuracy: BTreeMap<usize, f64>,
}

impl EvalReport {
    pub fn correct_at(&self, word: usize, k: usize) -> bool {
        self.words[word].rank <= k
    }

    pub fn correct_flags(&self, k: usize) -> Vec<bool> {
        self.words.iter().map(|w| w.rank <= k).collect()
    }

    pub fn token_accuracy(&self, freqs: &[u64], k: usize) -> Result<f64> {
        token_weighted_accuracy(&self.correct_flags(k), freqs)
    }

    pub fn mean_r(&self) -> f64 {
        self.words.iter().map(|w| w.target_r).sum::<f64>() / self.words.len() as f64
    }

    pub fn correlations(&self) -> Vec<f64> {
        self.words.iter().map(|w| w.target_r).collect()
    }
}

/// Strict correlation accuracy@k: a word is correct at `k` when its own
/// target row is among the `k` rows most correlated with its prediction.
pub fn accuracy_at_k(predicted: &DMatrix<f64>, target: &DMatrix<f64>, k_list: &[usize]) -> Result<EvalReport> {
    check_pair(predicted, target)?;
    let (m, q) = target.shape();
    if let Some(&k) = k_list.iter().find(|&&k| k == 0 || k > m) {
        return Err(Error::Validation(format!("k = {k} outside 1..={m}")));
    }
    let (zp, okp) = standardized_rows(predicted);
    let (zt, okt) = standardized_rows(target);
    let zt_mat = DMatrix::from_row_slice(m, q, &zt);

    let mut words: Vec<WordScore> = Vec::with_capacity(m);
    let blocks: Vec<usize> = (0..m).step_by(BLOCK).collect();
    let scored: Vec<Vec<WordScore>> = blocks
        .par_iter()
        .map(|&start| {
            let len = BLOCK.min(m - start);
            let block = DMatrix::from_row_slice(len, q, &zp[start * q..(start + len) * q]);
            // len × m candidate correlations
            let corr = &block * zt_mat.transpose();
            (0..len)
                .map(|bi| {
                    let i = start + bi;
                    let own = corr[(bi, i)];
                    let ahead = (0..m).filter(|&j| {
                        let c = corr[(bi, j)];
                        c > own || (c == own && j < i)
                    });
                    WordScore {
                        target_r: dot(&zp[i * q..(i + 1) * q], &zt[i * q..(i + 1) * q]),
                        rank: 1 + ahead.count(),
                        degenerate: !(okp[i] && okt[i]),
                    }
                })
                .collect()
        })
        .collect();
    scored.into_iter().for_each(|b| words.extend(b));

    let mut k_sorted = k_list.to_vec();
    k_sorted.sort_unstable();
    k_sorted.dedup();
    let type_accuracy = k_sorted
        .iter()
        .map(|&k| (k, words.iter().filter(|w| w.rank <= k).count() as f64 / m as f64))
        .collect();
    Ok(EvalReport { words, k_list: k_sorted, type_accuracy })
}

/// Accuracy over tokens: each word counts in proportion to its frequency.
pub fn token_weighted_accuracy(correct: &[bool], freqs: &[u64]) -> Result<f64> {
    if correct.len() != freqs.len() {
        return Err(Error::Dimension(format!("{} flags for {} frequencies", correct.len(), freqs.len())));
    }
    let total: u64 = freqs.iter().sum();
    if total == 0 {
        return Err(Error::Validation("total frequency is zero".into()));
    }
    let hit: u64 = correct.iter().zip(freqs).filter(|(c, _)| **c).map(|(_, f)| f).sum();
    Ok(hit as f64 / total as f64)
}

/// `1 - corr(ĉ_prime · F, s_target)`: the prime's predicted meaning scored
/// against the target's gold-standard meaning.
pub fn priming_measure(
    prime: usize,
    target: usize,
    mapping: &Mapping,
    cues: &dyn Design,
    semantics: &DMatrix<f64>,
) -> Result<f64> {
    let m = cues.nrows();
    if prime >= m || target >= m || target >= semantics.nrows() {
        return Err(Error::Validation(format!("prime {prime} or target {target} outside lexicon of {m}")));
    }
    if semantics.ncols() < 2 {
        return Err(Error::Validation("correlation needs at least 2 dimensions".into()));
    }
    let mut entries = Vec::new();
    cues.row_into(prime, &mut entries);
    let mut row = vec![0.0; cues.ncols()];
    for (j, v) in entries {
        row[j] = v;
    }
    let mut predicted = predict_row(&row, mapping)?;
    if predicted.len() != semantics.ncols() {
        return Err(Error::Dimension("mapping output does not match semantic dimension".into()));
    }
    let mut gold: Vec<f64> = semantics.row(target).iter().copied().collect();
    let ok = standardize(&mut predicted) & standardize(&mut gold);
    let r = if ok { dot(&predicted, &gold) } else { 0.0 };
    Ok(1.0 - r)
}

/// Binomial logit fit of correctness on `ln(f + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticSummary {
    pub intercept: f64,
    pub slope: f64,
    pub slope_std_error: f64,
    pub wald_z: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log frequency separates correct from incorrect words completely.
    pub separated: bool,
}

const IRLS_MAX_ITER: usize = 50;
const IRLS_TOL: f64 = 1e-8;
const SEPARATION_BOUND: f64 = 50.0;

/// Fits `P(correct) = logistic(a + b · ln(f + 1))` by iteratively reweighted
/// least squares and reports a Wald test for the slope. Complete separation
/// yields `converged = false` rather than an error.
pub fn logistic_freq_summary(correct: &[bool], freqs: &[u64]) -> Result<LogisticSummary> {
    if correct.len() != freqs.len() {
        return Err(Error::Dimension(format!("{} flags for {} frequencies", correct.len(), freqs.len())));
    }
    if correct.iter().all(|&c| c) || correct.iter().all(|&c| !c) {
        return Err(Error::Validation("logistic fit needs both correct and incorrect words".into()));
    }
    let x: Vec<f64> = freqs.iter().map(|&f| (f as f64).ln_1p()).collect();
    let y: Vec<f64> = correct.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();

    let range = |want: bool| {
        x.iter()
            .zip(correct)
            .filter(|(_, &c)| c == want)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)))
    };
    let (lo_t, hi_t) = range(true);
    let (lo_f, hi_f) = range(false);
    let separated = hi_f < lo_t || hi_t < lo_f;

    let information = |beta: &Vector2<f64>| {
        let mut info = Matrix2::zeros();
        let mut score = Vector2::zeros();
        for (&xi, &yi) in x.iter().zip(&y) {
            let mu = 1.0 / (1.0 + (-(beta[0] + beta[1] * xi)).exp());
            let w = mu * (1.0 - mu);
            info += Matrix2::new(w, w * xi, w * xi, w * xi * xi);
            score += Vector2::new(yi - mu, (yi - mu) * xi);
        }
        (info, score)
    };

    let mut beta = Vector2::zeros();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < IRLS_MAX_ITER {
        iterations += 1;
        let (info, score) = information(&beta);
        let Some(inv) = info.try_inverse() else {
            if iterations == 1 {
                return Err(Error::Validation("log frequency does not vary".into()));
            }
            break;
        };
        let step = inv * score;
        beta += step;
        if !beta.iter().all(|b| b.is_finite()) || beta[1].abs() > SEPARATION_BOUND {
            break;
        }
        if step.amax() < IRLS_TOL {
            converged = true;
            break;
        }
    }
    let converged = converged && !separated;
    let (info, _) = information(&beta);
    let slope_std_error = info.try_inverse().map_or(f64::INFINITY, |inv| inv[(1, 1)].max(0.0).sqrt());
    Ok(LogisticSummary {
        intercept: beta[0],
        slope: beta[1],
        slope_std_error,
        wald_z: beta[1] / slope_std_error,
        iterations,
        converged,
        separated,
    })
}
