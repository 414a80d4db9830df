use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use num_traits::ToPrimitive;
use serde::Serialize;

use super::{read_annotated, PipelineConfig, PipelineError};
use crate::scheduler::{baseline_budget, budget, budget_ratio, epoch_views, sample_epoch, Budget, Regime, TierIndex};

/// Where tier populations come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleSource {
    /// An annotated JSON-lines file; every record needs a tier.
    Annotated(PathBuf),
    /// Bare tier counts; manifests use consecutive synthetic ids.
    Counts([u64; 5]),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSummary {
    pub epoch: usize,
    /// Exact views, or expected views for the mixed regime.
    pub views: Budget,
    /// Manifest size when manifests were written.
    pub sampled: Option<u64>,
    pub cumulative: Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub regime: Regime,
    pub counts: [u64; 5],
    pub epochs: Vec<EpochSummary>,
    pub total: Budget,
    pub baseline: u64,
    /// `total / baseline`; `None` for an empty corpus.
    pub ratio: Option<f64>,
    pub manifests: Vec<PathBuf>,
    pub summary_path: PathBuf,
}

impl ScheduleReport {
    /// Ratio rounded to four decimals, or `-`.
    pub fn ratio_text(&self) -> String {
        self.ratio.map_or_else(|| "-".into(), |r| format!("{r:.4}"))
    }
}

#[derive(Serialize)]
struct ManifestLine<'a> {
    epoch: usize,
    regime: &'a str,
    id: u64,
}

/// Computes the budget table and, if `write_manifests`, one
/// `manifest_epoch_NN.jsonl` file per epoch; always writes
/// `schedule_summary.tsv`.
pub fn cmd_schedule(
    cfg: &PipelineConfig,
    source: &ScheduleSource,
    write_manifests: bool,
) -> Result<ScheduleReport, PipelineError> {
    cfg.log_run("schedule");
    let mut spec = cfg.schedule.clone();
    spec.seed = cfg.seed;
    spec.validate()?;

    let index = match source {
        ScheduleSource::Annotated(path) => {
            let records = read_annotated(path)?;
            let mut pairs = Vec::with_capacity(records.len());
            for (i, r) in records.iter().enumerate() {
                let tier = r.tier.ok_or_else(|| PipelineError::MissingTierField {
                    path: path.clone(),
                    line: i + 1,
                })?;
                pairs.push((r.id, tier));
            }
            Some(TierIndex::from_pairs(pairs))
        }
        ScheduleSource::Counts(counts) => write_manifests.then(|| TierIndex::from_counts(counts)),
    };
    let counts = match (&index, source) {
        (Some(ix), _) => ix.counts(),
        (None, ScheduleSource::Counts(c)) => *c,
        (None, ScheduleSource::Annotated(_)) => unreachable!("annotated input always builds an index"),
    };

    std::fs::create_dir_all(&cfg.output_dir).map_err(PipelineError::io(&cfg.output_dir))?;
    let mut epochs = Vec::with_capacity(spec.epochs);
    let mut manifests = Vec::new();
    let mut cumulative = Budget::Exact(0);
    for e in 0..spec.epochs {
        let views = epoch_views(&counts, &spec, e)?;
        cumulative = match (&cumulative, &views) {
            (Budget::Exact(a), Budget::Exact(b)) => Budget::Exact(a + b),
            (a, b) => Budget::Expected(a.as_rational() + b.as_rational()),
        };
        let sampled = match (&index, write_manifests) {
            (Some(ix), true) => {
                let manifest = sample_epoch(ix, &spec, e)?;
                let path = cfg.output_dir.join(format!("manifest_epoch_{e:02}.jsonl"));
                let mut out = BufWriter::new(File::create(&path).map_err(PipelineError::io(&path))?);
                for &id in &manifest.sampled_ids {
                    let line = ManifestLine {
                        epoch: e,
                        regime: spec.regime.name(),
                        id,
                    };
                    serde_json::to_writer(&mut out, &line).map_err(|err| PipelineError::io(&path)(err.into()))?;
                    out.write_all(b"\n").map_err(PipelineError::io(&path))?;
                }
                out.flush().map_err(PipelineError::io(&path))?;
                manifests.push(path);
                Some(manifest.size() as u64)
            }
            _ => None,
        };
        epochs.push(EpochSummary {
            epoch: e,
            views,
            sampled,
            cumulative: cumulative.clone(),
        });
    }

    let total = budget(&counts, &spec)?;
    let baseline = baseline_budget(&counts, spec.epochs);
    let ratio = budget_ratio(&total, baseline).and_then(|r| r.to_f64());

    let summary_path = cfg.output_dir.join("schedule_summary.tsv");
    let mut out = BufWriter::new(File::create(&summary_path).map_err(PipelineError::io(&summary_path))?);
    let io = PipelineError::io(&summary_path);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(
            out,
            "# regime={} epochs={} hard_start={} seed={} counts={:?}",
            spec.regime, spec.epochs, spec.hard_start, spec.seed, counts
        )?;
        writeln!(out, "epoch\tviews\tsampled\tcumulative")?;
        for s in &epochs {
            let sampled = s.sampled.map_or_else(|| "-".to_string(), |n| n.to_string());
            writeln!(out, "{}\t{}\t{}\t{}", s.epoch, s.views, sampled, s.cumulative)?;
        }
        writeln!(out, "total\t{total}")?;
        writeln!(out, "baseline\t{baseline}")?;
        writeln!(out, "ratio\t{}", ratio.map_or_else(|| "-".into(), |r| format!("{r:.4}")))?;
        out.flush()
    };
    write(&mut out).map_err(io)?;

    Ok(ScheduleReport {
        regime: spec.regime,
        counts,
        epochs,
        total,
        baseline,
        ratio,
        manifests,
        summary_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::Regime;

    #[test]
    fn staged_budget_from_counts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            output_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        let counts = [268, 107_370, 153_955, 703_283, 35_124];
        let r = cmd_schedule(&cfg, &ScheduleSource::Counts(counts), false).unwrap();
        assert_eq!(r.total, Budget::Exact(5_740_728));
        assert_eq!(r.baseline, 10_000_000);
        assert_eq!(r.ratio_text(), "0.5741");
        assert_eq!(r.epochs[9].cumulative, Budget::Exact(5_740_728));
        let text = std::fs::read_to_string(&r.summary_path).unwrap();
        assert!(text.contains("total\t5740728"));
    }

    #[test]
    fn manifests_for_small_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig {
            output_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        cfg.schedule.regime = Regime::Additive;
        let r = cmd_schedule(&cfg, &ScheduleSource::Counts([2, 1, 0, 0, 3]), true).unwrap();
        assert_eq!(r.manifests.len(), 10);
        assert_eq!(r.epochs[0].sampled, Some(2));
        assert_eq!(r.epochs[4].sampled, Some(6));
        let first = std::fs::read_to_string(&r.manifests[0]).unwrap();
        assert_eq!(first, "{\"epoch\":0,\"regime\":\"additive\",\"id\":0}\n{\"epoch\":0,\"regime\":\"additive\",\"id\":1}\n");
    }
}
