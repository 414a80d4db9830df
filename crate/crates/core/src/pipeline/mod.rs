//! Batch commands over corpus files: prevalence, annotation, scheduling,
//! statistics, benchmarking and the loss self-check.
//!
//! Work is split into fixed-size chunks that a pool of `workers` threads
//! processes independently; results are merged back in input order, so
//! every output is identical for any worker count.

mod annotate;
mod bench;
mod config;
mod input;
mod loss_check;
mod schedule;
mod summary;

pub use annotate::{annotate_rows, cmd_annotate, cmd_prevalence, AnnotateReport, PrevalenceReport};
pub use bench::{cmd_bench, BenchReport, BenchRun};
pub use config::{InputFormat, PipelineConfig};
pub use input::{read_annotated, read_corpus, CorpusRow};
pub use loss_check::{central_difference, correlate_files, loss_check, relative_error, CheckResult, LossCheckReport};
pub use schedule::{cmd_schedule, EpochSummary, ScheduleReport, ScheduleSource};
pub use summary::{cmd_stats, StatsReport};

use std::path::PathBuf;

use thiserror::Error;

use crate::fg::{LibraryError, PrevalenceError};
use crate::losses::LossError;
use crate::scheduler::ScheduleError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: no column named {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}:{line}: {reason}")]
    BadRecord { path: PathBuf, line: usize, reason: String },
    #[error("{path}:{line}: record has no tier")]
    MissingTierField { path: PathBuf, line: usize },
    #[error("input contains no records")]
    EmptyInput,
    #[error(transparent)]
    Prevalence(#[from] PrevalenceError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

impl PipelineError {
    /// True for errors caused by how the command was invoked rather than by
    /// the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> PipelineError {
        let path = path.into();
        move |source| PipelineError::Io { path, source }
    }
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))
}
