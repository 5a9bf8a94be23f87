//! Evaluation protocols.
//!
//! * Temporally independent (TI): repeated random hold-outs per spread,
//!   ignoring game dates, aggregated as mean ± SEM across simulations.
//! * Temporally dependent (TD): a single split on calendar year, training on
//!   earlier seasons and testing on later ones, plus a sweep over k.
//!
//! Every random stream is derived from the configured seed and the position
//! of the work item it serves, so results do not depend on thread scheduling.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bias::{
    build_profile, k_lowest_spreads, min_entropy_spread, BiasError, BiasProfile, Selection,
    SpreadBias, DEFAULT_THRESHOLD,
};
use crate::data::{
    bucket_by_spread, split_by_date, DataError, Dataset, GameRecord, Outcome, Spread, SpreadBucket,
};
use crate::density::KdeSettings;
use crate::models::{predict_max_prob, predict_random, score_ats, Decision, Model, Tally};
use crate::report::{EvaluationReport, KSweepRow, ModelSummary, ProfileRow, RunConfig};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no spread has at least {0} samples")]
    NoValidSpreads(usize),
    #[error("date split at {cutoff_year} leaves train = {train}, test = {test} records")]
    EmptySplit {
        cutoff_year: i32,
        train: usize,
        test: usize,
    },
    #[error("cannot summarise an empty list")]
    EmptySummary,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Bias(#[from] BiasError),
}

/// How the TI run picks its biased spreads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiSelection {
    /// Each simulation ranks spreads by its own training entropies.
    #[default]
    PerSimulation,
    /// Spreads are ranked once by the mean entropy over all simulations.
    PooledMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiConfig {
    pub n_simulations: usize,
    pub holdout_per_spread: usize,
    pub min_samples: usize,
    pub entropy_threshold: f64,
    pub kde: KdeSettings,
    pub seed: u64,
    pub selection: TiSelection,
}

impl Default for TiConfig {
    fn default() -> Self {
        TiConfig {
            n_simulations: 200,
            holdout_per_spread: 10,
            min_samples: 25,
            entropy_threshold: DEFAULT_THRESHOLD,
            kde: KdeSettings::default(),
            seed: 0,
            selection: TiSelection::PerSimulation,
        }
    }
}

impl TiConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_simulations == 0 {
            return Err(HarnessError::Config(
                "n_simulations must be at least 1".into(),
            ));
        }
        if self.holdout_per_spread == 0 {
            return Err(HarnessError::Config(
                "holdout_per_spread must be at least 1".into(),
            ));
        }
        if self.min_samples <= self.holdout_per_spread {
            return Err(HarnessError::Config(format!(
                "min_samples ({}) must exceed holdout_per_spread ({}) to leave training data",
                self.min_samples, self.holdout_per_spread
            )));
        }
        validate_shared(self.entropy_threshold, &self.kde)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdConfig {
    pub cutoff_year: i32,
    pub min_samples: usize,
    pub entropy_threshold: f64,
    pub kde: KdeSettings,
    pub seed: u64,
}

impl Default for TdConfig {
    fn default() -> Self {
        TdConfig {
            cutoff_year: 2017,
            min_samples: 15,
            entropy_threshold: DEFAULT_THRESHOLD,
            kde: KdeSettings::default(),
            seed: 0,
        }
    }
}

impl TdConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.min_samples == 0 {
            return Err(HarnessError::Config(
                "min_samples must be at least 1".into(),
            ));
        }
        validate_shared(self.entropy_threshold, &self.kde)
    }
}

fn validate_shared(threshold: f64, kde: &KdeSettings) -> Result<(), HarnessError> {
    if !threshold.is_finite() {
        return Err(HarnessError::Config(format!(
            "entropy threshold {threshold} is not finite"
        )));
    }
    if !kde.bandwidth.is_finite() || kde.bandwidth <= 0.0 {
        return Err(HarnessError::Config(format!(
            "bandwidth {} must be positive",
            kde.bandwidth
        )));
    }
    if kde.grid.lo() > kde.grid.hi() {
        return Err(HarnessError::Config(
            "grid lo must not exceed grid hi".into(),
        ));
    }
    Ok(())
}

/// Mean and standard error (n − 1 standard deviation over √n).
///
/// The SEM is `None` for a single value.
pub fn summarize(values: &[f64]) -> Result<(f64, Option<f64>), HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::EmptySummary);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, None));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, Some((var / n).sqrt())))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for the stream identified by `parts` under a base seed.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |h, p| splitmix64(h ^ splitmix64(*p)))
}

// Stream tags; keep distinct from any bucket index.
const RANDOM_GUESS_STREAM: u64 = u64::MAX;
const HOLDOUT_STREAM: u64 = u64::MAX - 1;

/// One simulation's split: per-bucket test outcomes and the profile trained on the rest.
struct SimSplit {
    test: Vec<Vec<Outcome>>,
    profile: BiasProfile,
}

/// Draws `holdout` outcomes uniformly without replacement as test data.
///
/// Both halves keep the bucket's original (date) order.
pub fn holdout_split<R: rand::Rng + ?Sized>(
    bucket: &SpreadBucket,
    holdout: usize,
    rng: &mut R,
) -> (SpreadBucket, Vec<Outcome>) {
    let mut held = index::sample(rng, bucket.len(), holdout).into_vec();
    held.sort_unstable();

    let mut train = Vec::with_capacity(bucket.len() - held.len());
    let mut test = Vec::with_capacity(held.len());
    let mut next = held.iter().peekable();
    for (i, o) in bucket.outcomes.iter().enumerate() {
        if next.peek() == Some(&&i) {
            next.next();
            test.push(*o);
        } else {
            train.push(*o);
        }
    }
    let train = SpreadBucket {
        spread: bucket.spread,
        outcomes: train,
    };
    (train, test)
}

fn split_simulation(
    buckets: &[SpreadBucket],
    cfg: &TiConfig,
    sim: usize,
) -> Result<SimSplit, HarnessError> {
    let mut train_buckets = Vec::with_capacity(buckets.len());
    let mut test = Vec::with_capacity(buckets.len());
    for (b, bucket) in buckets.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            cfg.seed,
            &[HOLDOUT_STREAM, sim as u64, b as u64],
        ));
        let (train, tests) = holdout_split(bucket, cfg.holdout_per_spread, &mut rng);
        train_buckets.push(train);
        test.push(tests);
    }
    let profile = build_profile(&train_buckets, &cfg.kde, cfg.entropy_threshold)?;
    Ok(SimSplit { test, profile })
}

#[derive(Debug, Default, Clone, Copy)]
struct SimTallies {
    random: Tally,
    max_prob: Tally,
    min_entropy: Tally,
    k_lowest: Tally,
    k: usize,
}

fn settle_all(tally: &mut Tally, decision: Decision, outcomes: &[Outcome], spread: Spread) {
    for o in outcomes {
        tally.record(score_ats(decision, *o, spread));
    }
}

/// Repeated random hold-out evaluation of all four strategies.
pub fn run_ti(dataset: &Dataset, cfg: &TiConfig) -> Result<EvaluationReport, HarnessError> {
    cfg.validate()?;
    let buckets = bucket_by_spread(dataset, cfg.min_samples)?;
    if buckets.is_empty() {
        return Err(HarnessError::NoValidSpreads(cfg.min_samples));
    }

    let splits: Vec<SimSplit> = (0..cfg.n_simulations)
        .into_par_iter()
        .map(|sim| split_simulation(&buckets, cfg, sim))
        .collect::<Result<_, _>>()?;

    let pooled_ranking = match cfg.selection {
        TiSelection::PerSimulation => None,
        TiSelection::PooledMean => Some(pooled_profile(&splits, cfg.entropy_threshold)?),
    };

    let tallies: Vec<SimTallies> = splits
        .par_iter()
        .enumerate()
        .map(|(sim, split)| {
            let ranking = pooled_ranking.as_ref().unwrap_or(&split.profile);
            evaluate_simulation(split, ranking, cfg, sim)
        })
        .collect::<Result<_, _>>()?;

    let models = vec![
        aggregate(Model::RandomGuess, None, tallies.iter().map(|t| t.random))?,
        aggregate(
            Model::MaxProbability,
            None,
            tallies.iter().map(|t| t.max_prob),
        )?,
        aggregate(
            Model::MinEntropy,
            Some(1),
            tallies.iter().map(|t| t.min_entropy),
        )?,
        aggregate(
            Model::KLowestEntropy,
            None,
            tallies.iter().map(|t| t.k_lowest),
        )?,
    ];

    let mut k_selected = BTreeMap::new();
    for t in &tallies {
        *k_selected.entry(t.k).or_insert(0) += 1;
    }

    let profile = buckets
        .iter()
        .enumerate()
        .map(|(b, bucket)| {
            let entries: Vec<&SpreadBias> = splits.iter().map(|s| &s.profile.entries[b]).collect();
            let p_home: Vec<f64> = entries.iter().map(|e| e.p_home).collect();
            let entropy: Vec<f64> = entries.iter().map(|e| e.entropy_bits).collect();
            let (p_home, _) = summarize(&p_home)?;
            let (entropy_bits, sem) = summarize(&entropy)?;
            let biased = entries
                .iter()
                .filter(|e| e.entropy_bits < cfg.entropy_threshold)
                .count();
            Ok(ProfileRow {
                spread: bucket.spread,
                p_home,
                entropy_bits,
                entropy_sd: sem.map(|s| s * (cfg.n_simulations as f64).sqrt()),
                n_train: bucket.len() - cfg.holdout_per_spread,
                n_test: cfg.holdout_per_spread * cfg.n_simulations,
                biased_share: biased as f64 / cfg.n_simulations as f64,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    Ok(EvaluationReport {
        config: RunConfig::TemporallyIndependent(cfg.clone()),
        valid_spreads: buckets.iter().map(|b| b.spread).collect(),
        n_test_samples: buckets.len() * cfg.holdout_per_spread * cfg.n_simulations,
        n_simulations: cfg.n_simulations,
        models,
        profile,
        k_selected,
        k_sweep: None,
    })
}

/// Profile whose entropies are the across-simulation means.
fn pooled_profile(splits: &[SimSplit], threshold: f64) -> Result<BiasProfile, HarnessError> {
    let first = &splits[0].profile;
    let n = splits.len() as f64;
    let entries = (0..first.len())
        .map(|b| {
            let p_home = splits
                .iter()
                .map(|s| s.profile.entries[b].p_home)
                .sum::<f64>()
                / n;
            let entropy = splits
                .iter()
                .map(|s| s.profile.entries[b].entropy_bits)
                .sum::<f64>()
                / n;
            let mut e = SpreadBias::from_home_probability(
                first.entries[b].spread,
                p_home,
                first.entries[b].n_train,
            )?;
            e.entropy_bits = entropy;
            Ok(e)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(BiasProfile::new(entries, threshold))
}

fn evaluate_simulation(
    split: &SimSplit,
    ranking: &BiasProfile,
    cfg: &TiConfig,
    sim: usize,
) -> Result<SimTallies, HarnessError> {
    let profile = &split.profile;
    let mut t = SimTallies::default();

    // Test samples are visited by spread, then date; one draw each.
    let mut rng =
        ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[RANDOM_GUESS_STREAM, sim as u64]));
    for (entry, tests) in profile.entries.iter().zip(&split.test) {
        for o in tests {
            t.random
                .record(score_ats(predict_random(&mut rng), *o, entry.spread));
        }
        settle_all(
            &mut t.max_prob,
            predict_max_prob(entry),
            tests,
            entry.spread,
        );
    }

    let position = |spread: Spread| {
        profile
            .entries
            .binary_search_by_key(&spread, |e| e.spread)
            .expect("ranking covers the same spreads")
    };

    let min = min_entropy_spread(ranking)?;
    let b = position(min.spread);
    settle_all(
        &mut t.min_entropy,
        predict_max_prob(&profile.entries[b]),
        &split.test[b],
        min.spread,
    );

    let chosen = k_lowest_spreads(ranking, Selection::Threshold)?;
    t.k = chosen.len();
    for c in chosen {
        let b = position(c.spread);
        settle_all(
            &mut t.k_lowest,
            predict_max_prob(&profile.entries[b]),
            &split.test[b],
            c.spread,
        );
    }
    Ok(t)
}

fn label(model: Model, k: Option<usize>) -> String {
    match (model, k) {
        (Model::KLowestEntropy, Some(k)) => format!("{k}-Lowest Ent"),
        _ => model.to_string(),
    }
}

/// Mean ± SEM of per-simulation win percentages; simulations without a
/// settled wager do not contribute a percentage.
fn aggregate(
    model: Model,
    k: Option<usize>,
    tallies: impl Iterator<Item = Tally>,
) -> Result<ModelSummary, HarnessError> {
    let mut total = Tally::default();
    let mut pcts = Vec::new();
    for t in tallies {
        total.merge(&t);
        pcts.extend(t.win_pct());
    }
    let (ats_win_pct, sem) = if pcts.is_empty() {
        (None, None)
    } else {
        let (m, s) = summarize(&pcts)?;
        (Some(m), s)
    };
    Ok(ModelSummary {
        model,
        label: label(model, k),
        k,
        ats_win_pct,
        sem,
        n_test: total.settled(),
        n_push: total.pushes,
        n_wins: total.wins,
    })
}

fn single_run_summary(model: Model, k: Option<usize>, tally: Tally) -> ModelSummary {
    ModelSummary {
        model,
        label: label(model, k),
        k,
        ats_win_pct: tally.win_pct(),
        sem: None,
        n_test: tally.settled(),
        n_push: tally.pushes,
        n_wins: tally.wins,
    }
}

/// Tally of max-probability wagers on the given spreads over `tests`.
fn settle_spreads(spreads: &[&SpreadBias], tests: &[&GameRecord]) -> Tally {
    let mut tally = Tally::default();
    for r in tests {
        if let Some(entry) = spreads.iter().find(|e| e.spread == r.spread) {
            tally.record(score_ats(predict_max_prob(entry), r.outcome(), r.spread));
        }
    }
    tally
}

/// Win percentage for every k from 1 to the number of profiled spreads.
pub fn sweep_k(
    profile: &BiasProfile,
    tests: &[&GameRecord],
) -> Result<Vec<KSweepRow>, HarnessError> {
    let selected = profile.biased_count();
    (1..=profile.len())
        .map(|k| {
            let spreads = k_lowest_spreads(profile, Selection::Count(k))?;
            let tally = settle_spreads(&spreads, tests);
            Ok(KSweepRow {
                k,
                ats_win_pct: tally.win_pct(),
                n_test: tally.settled(),
                n_push: tally.pushes,
                spreads: spreads.iter().map(|e| e.spread).collect(),
                threshold_selected: k == selected,
            })
        })
        .collect()
}

/// Single train-before / test-after backtest on calendar year.
pub fn run_td(dataset: &Dataset, cfg: &TdConfig) -> Result<EvaluationReport, HarnessError> {
    cfg.validate()?;
    let (train, test) = split_by_date(dataset, cfg.cutoff_year);
    if train.is_empty() || test.is_empty() {
        return Err(HarnessError::EmptySplit {
            cutoff_year: cfg.cutoff_year,
            train: train.len(),
            test: test.len(),
        });
    }
    let buckets = bucket_by_spread(&train, cfg.min_samples)?;
    if buckets.is_empty() {
        return Err(HarnessError::NoValidSpreads(cfg.min_samples));
    }
    let profile = build_profile(&buckets, &cfg.kde, cfg.entropy_threshold)?;

    // Test games at spreads without enough training history are not wagered.
    let mut tests: Vec<&GameRecord> = test
        .records
        .iter()
        .filter(|r| profile.get(r.spread).is_some())
        .collect();
    tests.sort_by_key(|r| (r.spread, r.date));

    let mut random = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[RANDOM_GUESS_STREAM]));
    for r in &tests {
        random.record(score_ats(predict_random(&mut rng), r.outcome(), r.spread));
    }
    let all: Vec<&SpreadBias> = profile.entries.iter().collect();
    let max_prob = settle_spreads(&all, &tests);
    let min = min_entropy_spread(&profile)?;
    let min_entropy = settle_spreads(&[min], &tests);
    let chosen = k_lowest_spreads(&profile, Selection::Threshold)?;
    let k_lowest = settle_spreads(&chosen, &tests);

    let models = vec![
        single_run_summary(Model::RandomGuess, None, random),
        single_run_summary(Model::MaxProbability, None, max_prob),
        single_run_summary(Model::MinEntropy, Some(1), min_entropy),
        single_run_summary(Model::KLowestEntropy, Some(chosen.len()), k_lowest),
    ];

    let sweep = sweep_k(&profile, &tests)?;

    let rows = profile
        .entries
        .iter()
        .map(|e| ProfileRow {
            spread: e.spread,
            p_home: e.p_home,
            entropy_bits: e.entropy_bits,
            entropy_sd: None,
            n_train: e.n_train,
            n_test: tests.iter().filter(|r| r.spread == e.spread).count(),
            biased_share: if e.entropy_bits < cfg.entropy_threshold {
                1.0
            } else {
                0.0
            },
        })
        .collect();

    Ok(EvaluationReport {
        config: RunConfig::TemporallyDependent(cfg.clone()),
        valid_spreads: profile.entries.iter().map(|e| e.spread).collect(),
        n_test_samples: tests.len(),
        n_simulations: 1,
        models,
        profile: rows,
        k_selected: BTreeMap::from([(chosen.len(), 1)]),
        k_sweep: Some(sweep),
    })
}

/// Per-spread profile of a whole dataset, as used for plotting and inspection.
pub fn profile_dataset(
    dataset: &Dataset,
    min_samples: usize,
    kde: &KdeSettings,
    threshold: f64,
) -> Result<(Vec<SpreadBucket>, BiasProfile), HarnessError> {
    validate_shared(threshold, kde)?;
    let buckets = bucket_by_spread(dataset, min_samples)?;
    if buckets.is_empty() {
        return Err(HarnessError::NoValidSpreads(min_samples));
    }
    let profile = build_profile(&buckets, kde, threshold)?;
    Ok((buckets, profile))
}
