use std::time::Instant;

use serde::Serialize;

use super::annotate::load_library;
use super::{annotate_rows, read_corpus, CorpusRow, PipelineConfig, PipelineError};
use crate::synth::synthetic_corpus;

/// Timing of one full parse, descriptor and tier pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRun {
    pub workers: usize,
    pub molecules: usize,
    pub seconds: f64,
    pub ms_per_mol: f64,
    pub mol_per_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub single: BenchRun,
    pub parallel: BenchRun,
    pub speedup: f64,
    /// `speedup / workers`.
    pub efficiency: f64,
    /// Logical CPUs visible to the process.
    pub available_cpus: usize,
}

fn time_run(rows: &[CorpusRow], cfg: &PipelineConfig, workers: usize) -> Result<BenchRun, PipelineError> {
    let library = load_library(cfg)?;
    let cfg = PipelineConfig {
        workers,
        ..cfg.clone()
    };
    let start = Instant::now();
    let (records, _, _) = annotate_rows(rows, &cfg, &library, None)?;
    let seconds = start.elapsed().as_secs_f64();
    let molecules = records.len();
    Ok(BenchRun {
        workers,
        molecules,
        seconds,
        ms_per_mol: seconds * 1e3 / molecules.max(1) as f64,
        mol_per_sec: molecules as f64 / seconds.max(f64::MIN_POSITIVE),
    })
}

/// Times the annotation pipeline with one worker and with `cfg.workers`.
///
/// Uses the configured input if there is one, otherwise `molecules`
/// synthetic SMILES generated from `cfg.seed`. One untimed warm-up pass
/// runs first.
pub fn cmd_bench(cfg: &PipelineConfig, molecules: usize) -> Result<BenchReport, PipelineError> {
    cfg.log_run("bench");
    let rows: Vec<CorpusRow> = match &cfg.input {
        Some(path) => read_corpus(path, &cfg.input_format()?)?,
        None => synthetic_corpus(molecules, cfg.seed)
            .into_iter()
            .enumerate()
            .map(|(i, smiles)| CorpusRow { id: i as u64, smiles })
            .collect(),
    };
    if rows.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    time_run(&rows[..rows.len().min(1000)], cfg, 1)?;
    let single = time_run(&rows, cfg, 1)?;
    let parallel = time_run(&rows, cfg, cfg.workers)?;
    let speedup = single.seconds / parallel.seconds.max(f64::MIN_POSITIVE);
    Ok(BenchReport {
        efficiency: speedup / cfg.workers as f64,
        speedup,
        single,
        parallel,
        available_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_synthetic_bench() {
        let cfg = PipelineConfig {
            workers: 2,
            ..Default::default()
        };
        let r = cmd_bench(&cfg, 200).unwrap();
        assert_eq!(r.single.molecules, 200);
        assert_eq!(r.parallel.workers, 2);
        assert!(r.single.mol_per_sec > 0.0);
    }
}
