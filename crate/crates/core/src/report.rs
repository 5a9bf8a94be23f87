//! Result types shared by both evaluation protocols, plus their tabular forms.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::data::Spread;
use crate::harness::{TdConfig, TiConfig};
use crate::models::Model;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum RunConfig {
    TemporallyIndependent(TiConfig),
    TemporallyDependent(TdConfig),
}

/// Aggregate performance of one strategy.
///
/// For Monte Carlo runs `ats_win_pct` is the mean of the per-simulation
/// percentages and `sem` their standard error; for a single backtest `sem`
/// is absent. `n_test` counts settled wagers over the whole run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub model: Model,
    pub label: String,
    pub k: Option<usize>,
    pub ats_win_pct: Option<f64>,
    pub sem: Option<f64>,
    pub n_test: usize,
    pub n_push: usize,
    pub n_wins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub spread: Spread,
    pub p_home: f64,
    pub entropy_bits: f64,
    /// Across-simulation standard deviation of the entropy (Monte Carlo only).
    pub entropy_sd: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    /// Fraction of runs in which the spread fell below the entropy threshold.
    pub biased_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSweepRow {
    pub k: usize,
    pub ats_win_pct: Option<f64>,
    pub n_test: usize,
    pub n_push: usize,
    pub spreads: Vec<Spread>,
    pub threshold_selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub config: RunConfig,
    pub valid_spreads: Vec<Spread>,
    pub n_test_samples: usize,
    pub n_simulations: usize,
    pub models: Vec<ModelSummary>,
    pub profile: Vec<ProfileRow>,
    /// How often each threshold-mode `k` was chosen.
    pub k_selected: BTreeMap<usize, usize>,
    pub k_sweep: Option<Vec<KSweepRow>>,
}

/// One line of the flat summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub ats_win_pct: Option<f64>,
    pub sem: Option<f64>,
    pub n_test: usize,
}

impl EvaluationReport {
    pub fn model(&self, model: Model) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == model)
    }

    pub fn sweep_row(&self, k: usize) -> Option<&KSweepRow> {
        self.k_sweep.as_ref()?.iter().find(|r| r.k == k)
    }

    /// Rows of the summary table.
    ///
    /// With a k-sweep the layout is Random, Max-Prob, Min-Ent and then one
    /// `<k>-Lowest Ent` row for every k from 2 up to the number of valid
    /// spreads. Without one it is the four strategies.
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        let base = [Model::RandomGuess, Model::MaxProbability, Model::MinEntropy];
        let mut rows: Vec<SummaryRow> = base
            .iter()
            .filter_map(|m| self.model(*m))
            .map(|m| SummaryRow {
                label: m.label.clone(),
                ats_win_pct: m.ats_win_pct,
                sem: m.sem,
                n_test: m.n_test,
            })
            .collect();
        match &self.k_sweep {
            Some(sweep) => rows.extend(sweep.iter().filter(|r| r.k >= 2).map(|r| SummaryRow {
                label: format!("{}-Lowest Ent", r.k),
                ats_win_pct: r.ats_win_pct,
                sem: None,
                n_test: r.n_test,
            })),
            None => rows.extend(self.model(Model::KLowestEntropy).map(|m| SummaryRow {
                label: m.label.clone(),
                ats_win_pct: m.ats_win_pct,
                sem: m.sem,
                n_test: m.n_test,
            })),
        }
        rows
    }

    /// Writes the summary table. The SEM column only appears for Monte Carlo runs.
    pub fn write_summary_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        let with_sem = matches!(self.config, RunConfig::TemporallyIndependent(_));
        if with_sem {
            writeln!(sink, "Model,Percent ATS Win,SEM,N Test-Samples")?;
        } else {
            writeln!(sink, "Model,Percent ATS Win,N Test-Samples")?;
        }
        for row in self.summary_rows() {
            let pct = fmt_opt(row.ats_win_pct, 2);
            if with_sem {
                writeln!(
                    sink,
                    "{},{},{},{}",
                    row.label,
                    pct,
                    fmt_opt(row.sem, 2),
                    row.n_test
                )?;
            } else {
                writeln!(sink, "{},{},{}", row.label, pct, row.n_test)?;
            }
        }
        Ok(())
    }

    pub fn write_profile_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(
            sink,
            "spread,p_home,entropy,entropy_sd,n_train,n_test,biased_share"
        )?;
        for r in &self.profile {
            writeln!(
                sink,
                "{},{},{},{},{},{},{}",
                r.spread,
                r.p_home,
                r.entropy_bits,
                r.entropy_sd.map_or(String::new(), |v| v.to_string()),
                r.n_train,
                r.n_test,
                r.biased_share
            )?;
        }
        Ok(())
    }

    pub fn write_sweep_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "k,percent_ats_win,n_test,n_push,threshold_selected")?;
        for r in self.k_sweep.iter().flatten() {
            writeln!(
                sink,
                "{},{},{},{},{}",
                r.k,
                fmt_opt(r.ats_win_pct, 4),
                r.n_test,
                r.n_push,
                r.threshold_selected
            )?;
        }
        Ok(())
    }
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.decimals$}"))
}
