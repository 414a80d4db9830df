use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::{read_annotated, PipelineError};
use crate::stats::{quartiles, summarize, Quartiles, Summary};
use crate::tiering::{tier_histogram, Tier};

/// Corpus statistics over an annotated file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub records: usize,
    pub mw: Summary,
    pub bertz_ct: Summary,
    pub n_ring: Summary,
    /// Counts for T0..T4; untiered records are not counted.
    pub histogram: [u64; 5],
    /// Bertz CT quartiles per tier, `None` for an empty tier.
    pub ct_by_tier: [Option<Quartiles>; 5],
}

pub fn cmd_stats(path: &Path) -> Result<StatsReport, PipelineError> {
    let records = read_annotated(path)?;
    let column = |f: fn(&crate::descriptors::DescriptorRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
    let mw = summarize(&column(|r| r.mw)).ok_or(PipelineError::EmptyInput)?;
    let bertz_ct = summarize(&column(|r| r.bertz_ct)).ok_or(PipelineError::EmptyInput)?;
    let n_ring = summarize(&column(|r| r.n_ring as f64)).ok_or(PipelineError::EmptyInput)?;
    let ct_by_tier = Tier::ALL.map(|t| {
        let ct: Vec<f64> = records.iter().filter(|r| r.tier == Some(t)).map(|r| r.bertz_ct).collect();
        quartiles(&ct)
    });
    Ok(StatsReport {
        records: records.len(),
        mw,
        bertz_ct,
        n_ring,
        histogram: tier_histogram(records.iter().filter_map(|r| r.tier)),
        ct_by_tier,
    })
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records\t{}", self.records)?;
        writeln!(f, "column\tmean\tmedian\tp99\tmin\tmax")?;
        for (name, s) in [("mw", &self.mw), ("bertz_ct", &self.bertz_ct), ("n_ring", &self.n_ring)] {
            writeln!(
                f,
                "{name}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
                s.mean, s.median, s.p99, s.min, s.max
            )?;
        }
        writeln!(f, "tier\tcount\tct_q1\tct_median\tct_q3")?;
        for t in Tier::ALL {
            let i = t.index();
            match &self.ct_by_tier[i] {
                Some(q) => writeln!(f, "{t}\t{}\t{:.3}\t{:.3}\t{:.3}", self.histogram[i], q.q1, q.median, q.q3)?,
                None => writeln!(f, "{t}\t{}\t-\t-\t-", self.histogram[i])?,
            }
        }
        Ok(())
    }
}
