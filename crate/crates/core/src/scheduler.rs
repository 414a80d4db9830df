//! Curriculum schedules: which tiers are active in each epoch, the sampled
//! manifest for an epoch and the molecule-view budget of a whole run.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tiering::Tier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Tier `T_k` joins at epoch `k`.
    Additive,
    /// Fixed ten-epoch plan: {T0,T1} for epochs 0-2, +T2 for 3-4, +T3 for
    /// 5-7, all tiers for 8-9.
    Staged10,
    /// Every tier every epoch, complex tiers subsampled with a weight that
    /// ramps linearly from the hard-start fraction to 1.
    Mixed,
    /// One tier added per `E/5` epochs, easiest first.
    Standard,
    /// [`Regime::Standard`] with the tier order reversed.
    Anti,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::Additive,
        Regime::Staged10,
        Regime::Mixed,
        Regime::Standard,
        Regime::Anti,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Additive => "additive",
            Regime::Staged10 => "staged10",
            Regime::Mixed => "mixed",
            Regime::Standard => "standard",
            Regime::Anti => "anti",
        }
    }

    pub fn is_deterministic(self) -> bool {
        self != Regime::Mixed
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| ScheduleError::UnknownRegime(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("epoch {epoch} outside 0..{epochs}")]
    EpochOutOfRange { epoch: usize, epochs: usize },
    #[error("staged10 needs exactly 10 epochs, got {0}")]
    Staged10RequiresTenEpochs(usize),
    #[error("unknown regime {0:?}")]
    UnknownRegime(String),
    #[error("epochs must be at least 1")]
    NoEpochs,
    #[error("hard-start fraction {0} outside [0, 1]")]
    HardStart(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub regime: Regime,
    pub epochs: usize,
    pub hard_start: f64,
    pub seed: u64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            regime: Regime::Staged10,
            epochs: 10,
            hard_start: 0.1,
            seed: 0,
        }
    }
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.epochs == 0 {
            return Err(ScheduleError::NoEpochs);
        }
        if !(0.0..=1.0).contains(&self.hard_start) {
            return Err(ScheduleError::HardStart(self.hard_start));
        }
        if self.regime == Regime::Staged10 && self.epochs != 10 {
            return Err(ScheduleError::Staged10RequiresTenEpochs(self.epochs));
        }
        Ok(())
    }
}

/// Tiers in play at epoch `e`, ascending. The mixed regime has every tier
/// in play; use [`tier_weights_mixed`] for its inclusion weights.
pub fn active_tiers(regime: Regime, e: usize, epochs: usize) -> Result<Vec<Tier>, ScheduleError> {
    if e >= epochs {
        return Err(ScheduleError::EpochOutOfRange { epoch: e, epochs });
    }
    let range = |lo: usize, hi: usize| (lo..=hi).filter_map(Tier::from_index).collect();
    Ok(match regime {
        Regime::Additive => range(0, e.min(4)),
        Regime::Staged10 => {
            if epochs != 10 {
                return Err(ScheduleError::Staged10RequiresTenEpochs(epochs));
            }
            match e {
                0..=2 => range(0, 1),
                3..=4 => range(0, 2),
                5..=7 => range(0, 3),
                _ => range(0, 4),
            }
        }
        Regime::Mixed => range(0, 4),
        Regime::Standard => range(0, stage(e, epochs)),
        Regime::Anti => range(4 - stage(e, epochs), 4),
    })
}

// Stage `floor(5e / E)`, so each of the five stages spans E/5 epochs.
fn stage(e: usize, epochs: usize) -> usize {
    (e * 5 / epochs).min(4)
}

/// Inclusion weight per tier (indexed by [`Tier::index`]) for the mixed
/// regime. A single-epoch run is treated as already at the final epoch.
pub fn tier_weights_mixed(e: usize, epochs: usize, hard_start: f64) -> [f64; 5] {
    // the final epoch is pinned to exactly 1
    let rho = if epochs < 2 || e + 1 >= epochs {
        1.0
    } else {
        hard_start + (1.0 - hard_start) * e as f64 / (epochs - 1) as f64
    };
    [1.0, 1.0, rho, rho, rho]
}

fn complex_weight_exact(e: usize, epochs: usize, hard_start: f64) -> BigRational {
    let one = BigRational::from_integer(1.into());
    if epochs < 2 {
        return one;
    }
    let a0 = BigRational::from_float(hard_start).unwrap_or_else(BigRational::zero);
    let frac = BigRational::new((e as u64).into(), ((epochs - 1) as u64).into());
    a0.clone() + (one - a0) * frac
}

/// Molecule ids grouped by tier, each list ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TierIndex {
    ids: [Vec<u64>; 5],
}

impl TierIndex {
    pub fn new() -> TierIndex {
        TierIndex::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (u64, Tier)>>(pairs: I) -> TierIndex {
        let mut index = TierIndex::new();
        for (id, tier) in pairs {
            index.ids[tier.index()].push(id);
        }
        for list in &mut index.ids {
            list.sort_unstable();
        }
        index
    }

    /// Synthetic index with consecutive ids: the first `counts[0]` ids are
    /// T0, the next `counts[1]` are T1, and so on.
    pub fn from_counts(counts: &[u64; 5]) -> TierIndex {
        let mut next = 0u64;
        let mut index = TierIndex::new();
        for (k, &c) in counts.iter().enumerate() {
            index.ids[k] = (next..next + c).collect();
            next += c;
        }
        index
    }

    pub fn ids(&self, tier: Tier) -> &[u64] {
        &self.ids[tier.index()]
    }

    pub fn counts(&self) -> [u64; 5] {
        std::array::from_fn(|k| self.ids[k].len() as u64)
    }

    pub fn len(&self) -> u64 {
        self.counts().iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The molecules drawn for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochManifest {
    pub epoch: usize,
    pub regime: Regime,
    pub active_tiers: Vec<Tier>,
    /// Per-tier inclusion weights; set for the mixed regime only.
    pub weights: Option<[f64; 5]>,
    /// Ascending molecule ids.
    pub sampled_ids: Vec<u64>,
}

impl EpochManifest {
    pub fn size(&self) -> usize {
        self.sampled_ids.len()
    }
}

/// Uniform draw in [0, 1) determined by `(seed, id, epoch)` alone: a ChaCha8
/// stream keyed by the seed, selected by the molecule id and positioned by
/// the epoch.
pub fn inclusion_draw(rng: &mut ChaCha8Rng, id: u64, epoch: usize) -> f64 {
    rng.set_stream(id);
    rng.set_word_pos(epoch as u128 * 16);
    rng.gen::<f64>()
}

pub fn sample_epoch(index: &TierIndex, spec: &ScheduleSpec, e: usize) -> Result<EpochManifest, ScheduleError> {
    spec.validate()?;
    let active = active_tiers(spec.regime, e, spec.epochs)?;
    let weights = (spec.regime == Regime::Mixed).then(|| tier_weights_mixed(e, spec.epochs, spec.hard_start));

    let per_tier: Vec<Vec<u64>> = active
        .par_iter()
        .map(|&tier| {
            let ids = index.ids(tier);
            match weights {
                None => ids.to_vec(),
                Some(w) if w[tier.index()] >= 1.0 => ids.to_vec(),
                Some(w) => {
                    let rho = w[tier.index()];
                    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                    ids.iter()
                        .copied()
                        .filter(|&id| inclusion_draw(&mut rng, id, e) < rho)
                        .collect()
                }
            }
        })
        .collect();
    let mut sampled_ids: Vec<u64> = per_tier.into_iter().flatten().collect();
    sampled_ids.sort_unstable();
    Ok(EpochManifest {
        epoch: e,
        regime: spec.regime,
        active_tiers: active,
        weights,
        sampled_ids,
    })
}

/// Total molecule-views of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Budget {
    /// Deterministic regimes.
    Exact(u64),
    /// Expected views of the mixed regime.
    Expected(BigRational),
}

impl Budget {
    pub fn to_f64(&self) -> f64 {
        match self {
            Budget::Exact(n) => *n as f64,
            Budget::Expected(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn as_rational(&self) -> BigRational {
        match self {
            Budget::Exact(n) => BigRational::from_integer((*n).into()),
            Budget::Expected(r) => r.clone(),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Exact(n) => write!(f, "{n}"),
            Budget::Expected(r) if r.is_integer() => write!(f, "{}", r.to_integer()),
            Budget::Expected(_) => write!(f, "{:.6}", self.to_f64()),
        }
    }
}

/// Views in epoch `e` given the tier populations.
pub fn epoch_views(counts: &[u64; 5], spec: &ScheduleSpec, e: usize) -> Result<Budget, ScheduleError> {
    let active = active_tiers(spec.regime, e, spec.epochs)?;
    if spec.regime.is_deterministic() {
        return Ok(Budget::Exact(active.iter().map(|t| counts[t.index()]).sum()));
    }
    let rho = complex_weight_exact(e, spec.epochs, spec.hard_start);
    let simple = BigRational::from_integer((counts[0] + counts[1]).into());
    let complex = BigRational::from_integer((counts[2] + counts[3] + counts[4]).into());
    Ok(Budget::Expected(simple + complex * rho))
}

/// Sum of [`epoch_views`] over the run.
pub fn budget(counts: &[u64; 5], spec: &ScheduleSpec) -> Result<Budget, ScheduleError> {
    spec.validate()?;
    let mut exact = 0u64;
    let mut expected = BigRational::zero();
    for e in 0..spec.epochs {
        match epoch_views(counts, spec, e)? {
            Budget::Exact(n) => exact += n,
            Budget::Expected(r) => expected += r,
        }
    }
    Ok(if spec.regime.is_deterministic() {
        Budget::Exact(exact)
    } else {
        Budget::Expected(expected)
    })
}

/// Every molecule in every epoch.
pub fn baseline_budget(counts: &[u64; 5], epochs: usize) -> u64 {
    counts.iter().sum::<u64>() * epochs as u64
}

/// Exact budget / baseline ratio.
pub fn budget_ratio(budget: &Budget, baseline: u64) -> Option<BigRational> {
    (baseline > 0).then(|| budget.as_rational() / BigRational::from_integer(baseline.into()))
}
