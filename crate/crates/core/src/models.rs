//! The four wagering strategies and against-the-spread settlement.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::bias::{
    k_lowest_spreads, min_entropy_spread, BiasError, BiasProfile, Selection, SpreadBias,
};
use crate::data::{Outcome, Spread};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Decision {
    Home,
    Visitor,
}

impl Decision {
    pub fn flip(self) -> Decision {
        match self {
            Decision::Home => Decision::Visitor,
            Decision::Visitor => Decision::Home,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AtsResult {
    Win,
    Loss,
    Push,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Model {
    RandomGuess,
    MaxProbability,
    MinEntropy,
    KLowestEntropy,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::RandomGuess => "Random",
            Model::MaxProbability => "Max-Prob",
            Model::MinEntropy => "Min-Ent",
            Model::KLowestEntropy => "k-Lowest Ent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Wager {
    pub spread: Spread,
    pub decision: Decision,
    pub model: Model,
}

/// Coin flip on a uniform draw in `[0, 1)`: Visitor below one half.
pub fn decide_random(draw: f64) -> Decision {
    const OUTCOMES: f64 = 2.0;
    if draw < 1.0 / OUTCOMES {
        Decision::Visitor
    } else {
        Decision::Home
    }
}

/// Consumes exactly one uniform draw from `rng`.
pub fn predict_random<R: Rng + ?Sized>(rng: &mut R) -> Decision {
    decide_random(rng.gen::<f64>())
}

/// Visitor only when its cover probability is strictly larger; Home otherwise.
pub fn predict_max_prob(bias: &SpreadBias) -> Decision {
    if bias.p_visitor > bias.p_home {
        Decision::Visitor
    } else {
        Decision::Home
    }
}

pub fn predict_min_entropy(profile: &BiasProfile) -> Result<Wager, BiasError> {
    let entry = min_entropy_spread(profile)?;
    Ok(Wager {
        spread: entry.spread,
        decision: predict_max_prob(entry),
        model: Model::MinEntropy,
    })
}

/// One max-probability wager per selected low-entropy spread, most biased first.
pub fn predict_k_lowest(
    profile: &BiasProfile,
    selection: Selection,
) -> Result<Vec<Wager>, BiasError> {
    Ok(k_lowest_spreads(profile, selection)?
        .into_iter()
        .map(|e| Wager {
            spread: e.spread,
            decision: predict_max_prob(e),
            model: Model::KLowestEntropy,
        })
        .collect())
}

/// Home covers when the outcome is below the spread, visitor when above.
pub fn score_ats(decision: Decision, outcome: Outcome, spread: Spread) -> AtsResult {
    use std::cmp::Ordering::*;
    let covering = match spread.cmp_outcome(outcome) {
        Less => Decision::Home,
        Greater => Decision::Visitor,
        Equal => return AtsResult::Push,
    };
    if covering == decision {
        AtsResult::Win
    } else {
        AtsResult::Loss
    }
}

/// Running win/loss/push counts for one strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub wins: usize,
    pub losses: usize,
    pub pushes: usize,
}

impl Tally {
    pub fn record(&mut self, result: AtsResult) {
        match result {
            AtsResult::Win => self.wins += 1,
            AtsResult::Loss => self.losses += 1,
            AtsResult::Push => self.pushes += 1,
        }
    }

    pub fn settled(&self) -> usize {
        self.wins + self.losses
    }

    /// Win percentage over settled wagers; pushes are excluded.
    pub fn win_pct(&self) -> Option<f64> {
        match self.settled() {
            0 => None,
            n => Some(100.0 * self.wins as f64 / n as f64),
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.wins += other.wins;
        self.losses += other.losses;
        self.pushes += other.pushes;
    }
}
