//! Linear mappings between word forms and word meanings.
//!
//! A lexicon pairs each word with a sparse binary cue vector (boundary-marked
//! n-grams of its form) and a dense semantic vector (an embedding). This crate
//! estimates the linear maps between the two spaces and scores them:
//!
//! - [`solvers`]: endstate least squares (`el`), frequency-informed weighted
//!   least squares (`fil`) and incremental Widrow-Hoff learning (`whl`), each
//!   behind the [`solvers::MappingSolver`] trait and selectable by name from a
//!   [`solvers::SolverRegistry`].
//! - [`cues`]: n-gram cue extraction (including tone-annotated multichannel
//!   schemes) and the sparse cue matrix.
//! - [`eval`]: correlation accuracy@k, token-weighted accuracy, the `1 - r`
//!   latency measure, priming and a logistic accuracy-vs-frequency summary.
//! - [`trajectory`]: ordered-stream learning with periodic checkpoints and
//!   frequency-over-time statistics.
//! - [`data`]: lexicon, embedding and event-stream loading plus a seeded
//!   synthetic generator.

pub mod cues;
pub mod data;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod solvers;
pub mod stats;
pub mod trajectory;

pub use cues::{build_cue_matrix, extract_multichannel, extract_ngrams, Channel, CueMatrix, CueScheme, CueSource};
pub use data::{
    align, expand_to_events, load_embeddings, load_event_stream, load_lexicon, synth_lexicon, EmbeddingTable,
    EventStream, Lexicon, LexiconEntry, ShufflePolicy, TableFormat,
};
pub use error::{Error, Result};
pub use eval::{
    accuracy_at_k, logistic_freq_summary, priming_measure, rt_measure, target_correlations,
    token_weighted_accuracy, EvalReport, LogisticSummary,
};
pub use matrix::{Design, SemanticMatrix};
pub use solvers::{
    predict, solve_endstate, solve_fil, solve_production, train_whl, weights_from_freqs, Direction, Mapping,
    MappingSolver, Method, SolverParams, SolverRegistry, WeightTransform, WeightVector,
};
pub use trajectory::{compare_whl_fil, freq_time_stats, run_trajectory, FreqTimeStats, TrajectoryResult};
