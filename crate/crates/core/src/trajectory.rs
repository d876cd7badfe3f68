//! Ordered-stream learning with periodic evaluation, and statistics of how a
//! word's frequency is spread over time.

use nalgebra::DMatrix;

use crate::data::EventStream;
use crate::error::{Error, Result};
use crate::eval::target_correlations;
use crate::matrix::Design;
use crate::solvers::{predict, Checkpoint, Mapping, WhlInit, WhlLearner};
use crate::stats::pearson;

/// Events per batch used unless configured otherwise.
pub const DEFAULT_INTERVAL: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    /// One checkpoint per completed batch, the last one at stream end.
    pub checkpoints: Vec<Checkpoint>,
    /// `batch_counts[word][batch]`: occurrences of the word in that batch.
    pub batch_counts: Vec<Vec<u64>>,
    pub eta: f64,
    pub interval: usize,
    pub final_mapping: Mapping,
    /// Mapping after each checkpoint, when requested.
    pub snapshots: Option<Vec<Mapping>>,
}

impl TrajectoryResult {
    pub fn batches(&self) -> usize {
        self.checkpoints.len()
    }

    /// Total occurrences per word over the whole stream.
    pub fn totals(&self) -> Vec<u64> {
        self.batch_counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Batch counts divided by the largest count inside the same batch.
    pub fn normalized_counts(&self) -> Vec<Vec<f64>> {
        let b = self.batches();
        let max: Vec<u64> =
            (0..b).map(|j| self.batch_counts.iter().map(|row| row[j]).max().unwrap_or(0)).collect();
        self.batch_counts
            .iter()
            .map(|row| row.iter().zip(&max).map(|(&c, &mx)| if mx == 0 { 0.0 } else { c as f64 / mx as f64 }).collect())
            .collect()
    }
}

pub fn run_trajectory(
    design: &dyn Design,
    target: &DMatrix<f64>,
    stream: &EventStream,
    eta: f64,
    interval: usize,
) -> Result<TrajectoryResult> {
    run_trajectory_with(design, target, stream, eta, interval, false)
}

/// Widrow-Hoff learning over `stream`, evaluating every word after every
/// `interval` events and at the end of the stream.
pub fn run_trajectory_with(
    design: &dyn Design,
    target: &DMatrix<f64>,
    stream: &EventStream,
    eta: f64,
    interval: usize,
    keep_snapshots: bool,
) -> Result<TrajectoryResult> {
    if interval == 0 {
        return Err(Error::Validation("checkpoint interval must be at least 1".into()));
    }
    if stream.is_empty() {
        return Err(Error::Validation("event stream is empty".into()));
    }
    let m = design.nrows();
    let batches = stream.len().div_ceil(interval);
    let mut batch_counts = vec![vec![0u64; batches]; m];
    let mut learner = WhlLearner::new(design, target, eta, WhlInit::Zeros)?;
    let mut checkpoints = Vec::with_capacity(batches);
    let mut snapshots = keep_snapshots.then(Vec::new);

    for (t, &id) in stream.ids().iter().enumerate() {
        learner.step(id)?;
        batch_counts[id][t / interval] += 1;
        if learner.events() % interval == 0 || learner.events() == stream.len() {
            checkpoints.push(learner.checkpoint()?);
            if let Some(s) = snapshots.as_mut() {
                let mut snap = learner_mapping(&learner);
                snap.hyperparams.events = Some(learner.events());
                s.push(snap);
            }
        }
    }
    Ok(TrajectoryResult { checkpoints, batch_counts, eta, interval, final_mapping: learner.into_mapping(), snapshots })
}

fn learner_mapping(learner: &WhlLearner<'_>) -> Mapping {
    Mapping {
        data: learner.mapping_data(),
        method: crate::solvers::Method::WidrowHoff,
        direction: crate::solvers::Direction::Comprehension,
        hyperparams: crate::solvers::Hyperparams { eta: Some(learner.eta()), ..Default::default() },
    }
}

/// Shape of one word's frequency distribution over batches `1..=B`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqTimeStats {
    pub total: u64,
    /// Count-weighted mean batch index.
    pub mean: f64,
    /// Batch with the largest count; earliest on ties.
    pub mode: usize,
    /// Weighted third standardized moment. Negative when mass sits late.
    pub skewness: f64,
    /// Weighted excess kurtosis before damping.
    pub excess_kurtosis: f64,
    /// `sign(g) · ln(1 + |g|)` of the excess kurtosis `g`.
    pub kurtosis_t: f64,
    /// All occurrences fall in a single batch.
    pub degenerate: bool,
}

pub fn freq_time_stats(counts: &[u64]) -> Result<FreqTimeStats> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Validation("word never occurs in the stream".into()));
    }
    let w = total as f64;
    let mut mode = 1;
    for (b, &c) in counts.iter().enumerate() {
        if c > counts[mode - 1] {
            mode = b + 1;
        }
    }
    let mean = counts.iter().enumerate().map(|(b, &c)| (b + 1) as f64 * c as f64).sum::<f64>() / w;
    let degenerate = counts.iter().filter(|&&c| c > 0).count() == 1;
    if degenerate {
        return Ok(FreqTimeStats {
            total,
            mean,
            mode,
            skewness: 0.0,
            excess_kurtosis: 0.0,
            kurtosis_t: 0.0,
            degenerate,
        });
    }
    let moment = |p: i32| {
        counts.iter().enumerate().map(|(b, &c)| c as f64 * ((b + 1) as f64 - mean).powi(p)).sum::<f64>() / w
    };
    let (m2, m3, m4) = (moment(2), moment(3), moment(4));
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let kurtosis_t = excess_kurtosis.signum() * excess_kurtosis.abs().ln_1p();
    Ok(FreqTimeStats { total, mean, mode, skewness, excess_kurtosis, kurtosis_t, degenerate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WhlFilComparison {
    /// Final incremental target correlations.
    pub whl: Vec<f64>,
    pub fil: Vec<f64>,
    /// `whl - fil` per word.
    pub per_word_delta: Vec<f64>,
    /// Correlation between the two correlation vectors.
    pub pearson_r: f64,
}

/// Compares the end state of a trajectory with a frequency-weighted mapping
/// fitted on counts from the same stream.
pub fn compare_whl_fil(
    traj: &TrajectoryResult,
    fil_mapping: &Mapping,
    design: &dyn Design,
    target: &DMatrix<f64>,
    freqs_from_stream: &[u64],
) -> Result<WhlFilComparison> {
    let m = design.nrows();
    if traj.batch_counts.len() != m || freqs_from_stream.len() != m || target.nrows() != m {
        return Err(Error::Dimension(format!(
            "trajectory covers {} words, frequencies {}, lexicon {m}",
            traj.batch_counts.len(),
            freqs_from_stream.len()
        )));
    }
    if traj.totals() != freqs_from_stream {
        return Err(Error::Validation("frequencies were not counted from the trajectory's stream".into()));
    }
    let whl = traj.checkpoints.last().expect("trajectory has a checkpoint").correlations.clone();
    let fil = target_correlations(&predict(design, fil_mapping)?, target)?.values;
    let per_word_delta = whl.iter().zip(&fil).map(|(a, b)| a - b).collect();
    let pearson_r = pearson(&whl, &fil).unwrap_or(0.0);
    Ok(WhlFilComparison { whl, fil, per_word_delta, pearson_r })
}
