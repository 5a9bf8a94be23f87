//! Kernel density estimates of p(outcome | spread) on an integer outcome grid.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Outcome, Spread};

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("no outcomes to estimate a density from")]
    Empty,
    #[error("bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
    #[error("grid bounds must satisfy lo <= hi, got [{lo}, {hi}]")]
    Grid { lo: i32, hi: i32 },
    #[error("mass vector has {got} entries, grid has {expected}")]
    Length { got: usize, expected: usize },
    #[error("mass must be non-negative and sum to 1 (sum = {0})")]
    NotProbability(f64),
    #[error("unknown kernel `{0}` (expected gaussian, triangular or boxcar)")]
    UnknownKernel(String),
}

/// Integer outcome values `lo..=hi` with unit step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeGrid {
    lo: i32,
    hi: i32,
}

impl Default for OutcomeGrid {
    fn default() -> Self {
        OutcomeGrid { lo: -40, hi: 40 }
    }
}

impl OutcomeGrid {
    pub fn new(lo: i32, hi: i32) -> Result<Self, DensityError> {
        if lo > hi {
            return Err(DensityError::Grid { lo, hi });
        }
        Ok(OutcomeGrid { lo, hi })
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> impl Iterator<Item = i32> {
        self.lo..=self.hi
    }

    fn index_of(&self, value: i32) -> (usize, bool) {
        let clamped = value.clamp(self.lo, self.hi);
        ((clamped - self.lo) as usize, clamped != value)
    }
}

/// Kernel shape. The bandwidth is the standard deviation for `Gaussian` and
/// the half-width of the support for `Triangular` and `Boxcar`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    Triangular,
    Boxcar,
}

impl Kernel {
    /// Unnormalised kernel weight at offset `u = x / bandwidth`.
    fn weight(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * u * u).exp(),
            Kernel::Triangular => (1.0 - u.abs()).max(0.0),
            Kernel::Boxcar => {
                if u.abs() <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl FromStr for Kernel {
    type Err = DensityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Kernel::Gaussian),
            "triangular" => Ok(Kernel::Triangular),
            "boxcar" => Ok(Kernel::Boxcar),
            _ => Err(DensityError::UnknownKernel(s.to_string())),
        }
    }
}

/// Everything needed to turn a bucket of outcomes into a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeSettings {
    pub bandwidth: f64,
    pub grid: OutcomeGrid,
    pub kernel: Kernel,
}

impl Default for KdeSettings {
    fn default() -> Self {
        KdeSettings {
            bandwidth: 4.0,
            grid: OutcomeGrid::default(),
            kernel: Kernel::Gaussian,
        }
    }
}

impl KdeSettings {
    pub fn estimate(&self, outcomes: &[Outcome]) -> Result<OutcomeDensity, DensityError> {
        estimate_density(outcomes, self.bandwidth, self.grid, self.kernel)
    }
}

/// Discrete probability mass over an [`OutcomeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDensity {
    grid: OutcomeGrid,
    mass: Vec<f64>,
    clamped: usize,
}

impl OutcomeDensity {
    /// Wraps an explicit mass vector after checking it is a probability vector.
    pub fn from_mass(grid: OutcomeGrid, mass: Vec<f64>) -> Result<Self, DensityError> {
        if mass.len() != grid.len() {
            return Err(DensityError::Length {
                got: mass.len(),
                expected: grid.len(),
            });
        }
        let sum: f64 = mass.iter().sum();
        if mass.iter().any(|m| m.is_nan() || *m < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(DensityError::NotProbability(sum));
        }
        Ok(OutcomeDensity {
            grid,
            mass,
            clamped: 0,
        })
    }

    pub fn grid(&self) -> OutcomeGrid {
        self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Number of samples that fell outside the grid and were moved to its edge.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.grid.points().zip(self.mass.iter().copied())
    }

    /// Grid point carrying the most mass (lowest such point on ties).
    pub fn argmax(&self) -> i32 {
        let mut best = 0;
        for (i, m) in self.mass.iter().enumerate() {
            if *m > self.mass[best] {
                best = i;
            }
        }
        self.grid.lo + best as i32
    }

    /// Writes `grid_point,mass` rows with a header.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "grid_point,mass")?;
        for (x, m) in self.iter() {
            writeln!(sink, "{x},{m:e}")?;
        }
        Ok(())
    }
}

/// Sums one kernel per sample over the grid and normalises the result.
///
/// Samples outside the grid are clamped onto its nearest edge. Normalisation
/// happens after truncation to the grid, so the returned mass is an exact
/// probability vector regardless of how much kernel tail falls off the ends.
pub fn estimate_density(
    outcomes: &[Outcome],
    bandwidth: f64,
    grid: OutcomeGrid,
    kernel: Kernel,
) -> Result<OutcomeDensity, DensityError> {
    if outcomes.is_empty() {
        return Err(DensityError::Empty);
    }
    if !bandwidth.is_finite() || bandwidth <= 0.0 {
        return Err(DensityError::Bandwidth(bandwidth));
    }

    let n = grid.len();
    let mut counts = vec![0usize; n];
    let mut clamped = 0;
    for o in outcomes {
        let (i, moved) = grid.index_of(o.0);
        counts[i] += 1;
        clamped += usize::from(moved);
    }

    // Samples sit on grid points, so the kernel only ever needs integer offsets.
    let table: Vec<f64> = (0..n)
        .map(|d| kernel.weight(d as f64 / bandwidth))
        .collect();

    let total = outcomes.len() as f64;
    let mut mass = vec![0.0; n];
    for (j, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let w = c as f64 / total;
        for (i, m) in mass.iter_mut().enumerate() {
            *m += w * table[i.abs_diff(j)];
        }
    }

    let sum: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= sum;
    }
    Ok(OutcomeDensity {
        grid,
        mass,
        clamped,
    })
}

/// Probability that the home side covers: mass at grid points `<= spread`.
///
/// A half-point spread falls between grid points, so e.g. -2.5 sums the mass
/// at -3 and below. The visitor probability is the complement.
pub fn home_cover_probability(density: &OutcomeDensity, spread: Spread) -> f64 {
    density
        .iter()
        .take_while(|(x, _)| i64::from(*x) * 10 <= i64::from(spread.tenths()))
        .fold(0.0, |acc, (_, m)| acc + m)
}

/// Empirical outcome counts on the grid (clamped like the density).
pub fn histogram(outcomes: &[Outcome], grid: OutcomeGrid) -> Vec<(i32, usize)> {
    let mut counts = vec![0usize; grid.len()];
    for o in outcomes {
        counts[grid.index_of(o.0).0] += 1;
    }
    grid.points().zip(counts).collect()
}

pub fn write_histogram_csv<W: Write>(hist: &[(i32, usize)], mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "outcome,count")?;
    for (x, c) in hist {
        writeln!(sink, "{x},{c}")?;
    }
    Ok(())
}
