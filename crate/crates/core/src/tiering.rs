//! Rule-based curriculum tiers T0 (simplest) to T4.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::DescriptorRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    T0,
    T1,
    T2,
    T3,
    T4,
}

impl Tier {
    pub const ALL: [Tier; 5] = [Tier::T0, Tier::T1, Tier::T2, Tier::T3, Tier::T4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Tier> {
        Tier::ALL.get(i).copied()
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.index())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown tier {0:?}")]
pub struct ParseTierError(pub String);

impl FromStr for Tier {
    type Err = ParseTierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T0" => Ok(Tier::T0),
            "T1" => Ok(Tier::T1),
            "T2" => Ok(Tier::T2),
            "T3" => Ok(Tier::T3),
            "T4" => Ok(Tier::T4),
            _ => Err(ParseTierError(s.to_string())),
        }
    }
}

/// The clause of the decision procedure that fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleTrace {
    /// No heteroatoms.
    Hydrocarbon,
    /// At least one stereo mark.
    Stereo,
    /// Rarity at or above the threshold.
    HighRarity,
    /// Aromatic substitution above the threshold.
    Substitution,
    /// High complexity per heavy atom on a polycyclic molecule.
    Complexity,
    /// Few groups, all common.
    CommonGroups,
    /// Moderate group count with simple substitution.
    MultiGroup,
    /// Nothing matched; at most `fg_mid_hi` groups.
    FallbackMid,
    /// Nothing matched; more than `fg_mid_hi` groups.
    FallbackHigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierLabel {
    pub tier: Tier,
    pub trace: RuleTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierConfig {
    pub rarity_threshold: f64,
    pub top_k: usize,
    pub s_threshold: usize,
    pub ct_per_ha_threshold: f64,
    pub min_rings_t3: usize,
    pub fg_low: usize,
    pub fg_mid_lo: usize,
    pub fg_mid_hi: usize,
}

impl Default for TierConfig {
    fn default() -> Self {
        TierConfig {
            rarity_threshold: 0.9,
            top_k: 6,
            s_threshold: 4,
            ct_per_ha_threshold: 50.0,
            min_rings_t3: 3,
            fg_low: 2,
            fg_mid_lo: 3,
            fg_mid_hi: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TierConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("group-count bounds must satisfy fg_low < fg_mid_lo <= fg_mid_hi")]
    GroupBounds,
}

impl TierConfig {
    pub fn validate(&self) -> Result<(), TierConfigError> {
        if !(self.rarity_threshold > 0.0) {
            return Err(TierConfigError::NotPositive("rarity_threshold"));
        }
        if !(self.ct_per_ha_threshold > 0.0) {
            return Err(TierConfigError::NotPositive("ct_per_ha_threshold"));
        }
        for (name, v) in [
            ("top_k", self.top_k),
            ("s_threshold", self.s_threshold),
            ("min_rings_t3", self.min_rings_t3),
            ("fg_low", self.fg_low),
        ] {
            if v == 0 {
                return Err(TierConfigError::NotPositive(name));
            }
        }
        if !(self.fg_low < self.fg_mid_lo && self.fg_mid_lo <= self.fg_mid_hi) {
            return Err(TierConfigError::GroupBounds);
        }
        Ok(())
    }
}

/// First-match evaluation: hydrocarbon, then stereo or rarity, then
/// substitution or complexity, then common groups, then multi-group, then
/// the fallback.
pub fn assign_tier(record: &DescriptorRecord, top: &HashSet<String>, cfg: &TierConfig) -> TierLabel {
    let label = |tier, trace| TierLabel { tier, trace };
    if record.n_het == 0 {
        return label(Tier::T0, RuleTrace::Hydrocarbon);
    }
    if record.n_sc > 0 {
        return label(Tier::T4, RuleTrace::Stereo);
    }
    if record.rarity >= cfg.rarity_threshold {
        return label(Tier::T4, RuleTrace::HighRarity);
    }
    if record.arom_sub > cfg.s_threshold {
        return label(Tier::T3, RuleTrace::Substitution);
    }
    if record.n_ha > 0
        && record.bertz_ct / record.n_ha as f64 > cfg.ct_per_ha_threshold
        && record.n_ring >= cfg.min_rings_t3
    {
        return label(Tier::T3, RuleTrace::Complexity);
    }
    if record.n_fg <= cfg.fg_low && record.fg_names.iter().all(|n| top.contains(n)) {
        return label(Tier::T1, RuleTrace::CommonGroups);
    }
    if (cfg.fg_mid_lo..=cfg.fg_mid_hi).contains(&record.n_fg) && record.arom_sub <= cfg.s_threshold {
        return label(Tier::T2, RuleTrace::MultiGroup);
    }
    if record.n_fg <= cfg.fg_mid_hi {
        label(Tier::T2, RuleTrace::FallbackMid)
    } else {
        label(Tier::T3, RuleTrace::FallbackHigh)
    }
}

/// Per-tier counts, indexed by [`Tier::index`].
pub fn tier_histogram<I: IntoIterator<Item = Tier>>(tiers: I) -> [u64; 5] {
    let mut counts = [0u64; 5];
    for t in tiers {
        counts[t.index()] += 1;
    }
    counts
}
