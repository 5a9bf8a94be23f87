//! Entropy of the cover distribution per spread, and selection of the most
//! biased (lowest-entropy) spreads.

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::data::{Spread, SpreadBucket};
use crate::density::{home_cover_probability, DensityError, KdeSettings};

pub const DEFAULT_THRESHOLD: f64 = 0.95;

#[derive(Debug, Error, PartialEq)]
pub enum BiasError {
    #[error("probability {0} outside [0, 1]")]
    Domain(f64),
    #[error("bias profile is empty")]
    EmptyProfile,
    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("spread {0} is {1}")]
    Bucket(Spread, DensityError),
}

/// Binary Shannon entropy in bits, with `0 · log2 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64, BiasError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BiasError::Domain(p));
    }
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadBias {
    pub spread: Spread,
    pub p_home: f64,
    pub p_visitor: f64,
    pub entropy_bits: f64,
    pub n_train: usize,
}

impl SpreadBias {
    pub fn from_home_probability(
        spread: Spread,
        p_home: f64,
        n_train: usize,
    ) -> Result<Self, BiasError> {
        Ok(SpreadBias {
            spread,
            p_home,
            p_visitor: 1.0 - p_home,
            entropy_bits: binary_entropy(p_home)?,
            n_train,
        })
    }
}

/// Order used to rank spreads: entropy, then |spread|, then spread.
pub fn entropy_order(a: &SpreadBias, b: &SpreadBias) -> Ordering {
    a.entropy_bits
        .total_cmp(&b.entropy_bits)
        .then(a.spread.abs().cmp(&b.spread.abs()))
        .then(a.spread.cmp(&b.spread))
}

/// How many low-entropy spreads to take.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    /// Exactly `k` spreads.
    Count(usize),
    /// Every spread strictly below the profile's threshold (possibly none).
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasProfile {
    pub entries: Vec<SpreadBias>,
    pub threshold: f64,
}

impl BiasProfile {
    /// Sorts entries by spread. Callers supply one entry per distinct spread.
    pub fn new(mut entries: Vec<SpreadBias>, threshold: f64) -> Self {
        entries.sort_by_key(|e| e.spread);
        debug_assert!(entries.windows(2).all(|w| w[0].spread != w[1].spread));
        BiasProfile { entries, threshold }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, spread: Spread) -> Option<&SpreadBias> {
        self.entries
            .binary_search_by_key(&spread, |e| e.spread)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Number of spreads whose entropy is strictly below the threshold.
    pub fn biased_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.entropy_bits < self.threshold)
            .count()
    }

    /// Entries in ascending entropy order.
    pub fn ranked(&self) -> Vec<&SpreadBias> {
        let mut ranked: Vec<&SpreadBias> = self.entries.iter().collect();
        ranked.sort_by(|a, b| entropy_order(a, b));
        ranked
    }

    pub fn write_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "spread,p_home,entropy,n_train,biased")?;
        for e in &self.entries {
            writeln!(
                sink,
                "{},{},{},{},{}",
                e.spread,
                e.p_home,
                e.entropy_bits,
                e.n_train,
                e.entropy_bits < self.threshold
            )?;
        }
        Ok(())
    }
}

/// Estimates a density per bucket and turns its cover probability into entropy.
pub fn build_profile(
    buckets: &[SpreadBucket],
    kde: &KdeSettings,
    threshold: f64,
) -> Result<BiasProfile, BiasError> {
    let entries = buckets
        .iter()
        .map(|b| {
            let density = kde
                .estimate(&b.outcomes)
                .map_err(|e| BiasError::Bucket(b.spread, e))?;
            let p_home = home_cover_probability(&density, b.spread).clamp(0.0, 1.0);
            SpreadBias::from_home_probability(b.spread, p_home, b.len())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BiasProfile::new(entries, threshold))
}

pub fn min_entropy_spread(profile: &BiasProfile) -> Result<&SpreadBias, BiasError> {
    profile
        .entries
        .iter()
        .min_by(|a, b| entropy_order(a, b))
        .ok_or(BiasError::EmptyProfile)
}

/// The `k` lowest-entropy spreads, most biased first.
pub fn k_lowest_spreads(
    profile: &BiasProfile,
    selection: Selection,
) -> Result<Vec<&SpreadBias>, BiasError> {
    if profile.is_empty() {
        return Err(BiasError::EmptyProfile);
    }
    let k = match selection {
        Selection::Count(k) if (1..=profile.len()).contains(&k) => k,
        Selection::Count(k) => {
            return Err(BiasError::KOutOfRange {
                k,
                max: profile.len(),
            })
        }
        Selection::Threshold => profile.biased_count(),
    };
    let mut ranked = profile.ranked();
    ranked.truncate(k);
    Ok(ranked)
}
