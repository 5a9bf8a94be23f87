mod manifest;
mod settings;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use atsbias::data::{deduplicate, parse_games, write_games};
use atsbias::density::{histogram, write_histogram_csv};
use atsbias::harness::{profile_dataset, run_td, run_ti, HarnessError};
use atsbias::{Dataset, EvaluationReport};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use manifest::{Outputs, RunManifest};
use settings::{Common, Resolved};

#[derive(Parser)]
#[command(
    name = "atsbias",
    version,
    about = "Spread bias detection and ATS backtests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and de-duplicate a raw game export
    Ingest(IngestArgs),
    /// Per-spread entropy table, outcome histograms and estimated densities
    Profile(Common),
    /// Repeated random hold-out evaluation of all strategies
    SimulateTi(Common),
    /// Train before the cutoff year, test on it and after, sweep k
    BacktestTd(Common),
}

#[derive(Args)]
struct IngestArgs {
    /// Raw game export
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Where to write the cleaned dataset [default: <out-dir>/dataset.csv]
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => ingest(&args),
        Command::Profile(args) => profile(&args),
        Command::SimulateTi(args) => simulate_ti(&args),
        Command::BacktestTd(args) => backtest_td(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_dataset(bytes: &[u8], path: &Path) -> Result<Dataset> {
    let raw = parse_games(bytes).with_context(|| format!("parsing {}", path.display()))?;
    Ok(deduplicate(&raw)?)
}

fn no_spread_hint(e: HarnessError) -> anyhow::Error {
    match e {
        HarnessError::NoValidSpreads(n) => anyhow::anyhow!(
            "no spread has at least {n} samples; lower --min-samples or supply more games"
        ),
        other => other.into(),
    }
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn ingest(args: &IngestArgs) -> Result<()> {
    let bytes = read_input(&args.input)?;
    let raw = parse_games(bytes.as_slice())
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let unique = deduplicate(&raw)?;

    let output = args
        .output
        .clone()
        .unwrap_or_else(|| args.out_dir.join("dataset.csv"));
    let manifest = RunManifest::new("ingest", &serde_json::Value::Null, &args.input, &bytes)?;
    let mut body = manifest.comment_line().into_bytes();
    write_games(&mut body, &unique)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&output, body).with_context(|| format!("writing {}", output.display()))?;

    println!(
        "{} rows, {} unique, {} duplicates removed",
        raw.len(),
        unique.len(),
        raw.len() - unique.len()
    );
    if let Some(mean) = unique.spread_mean() {
        println!("spread mean {mean:.2}");
    }
    println!("wrote {}", output.display());
    Ok(())
}

#[derive(Serialize)]
struct ProfileConfig {
    min_samples: usize,
    entropy_threshold: f64,
    kde: atsbias::KdeSettings,
}

#[derive(Serialize)]
struct ProfileEntry<'a> {
    #[serde(flatten)]
    bias: &'a atsbias::SpreadBias,
    clamped: usize,
}

fn profile(args: &Common) -> Result<()> {
    let settings = Resolved::new(args)?;
    let config = ProfileConfig {
        min_samples: settings.min_samples(atsbias::TiConfig::default().min_samples),
        entropy_threshold: settings.entropy_threshold(),
        kde: settings.kde()?,
    };
    let bytes = read_input(&args.input)?;
    let dataset = load_dataset(&bytes, &args.input)?;
    let (buckets, bias) = profile_dataset(
        &dataset,
        config.min_samples,
        &config.kde,
        config.entropy_threshold,
    )
    .map_err(no_spread_hint)?;

    let manifest = RunManifest::new("profile", &config, &args.input, &bytes)?;
    let mut out = Outputs::new(&args.out_dir, manifest);
    let mut entries = Vec::with_capacity(buckets.len());
    for (bucket, entry) in buckets.iter().zip(&bias.entries) {
        let density = config.kde.estimate(&bucket.outcomes)?;
        let hist = histogram(&bucket.outcomes, config.kde.grid);
        out.table(format!("hist_{}.csv", bucket.spread), |w| {
            write_histogram_csv(&hist, w)
        })?;
        out.table(format!("pdf_{}.csv", bucket.spread), |w| {
            density.write_csv(w)
        })?;
        entries.push(ProfileEntry {
            bias: entry,
            clamped: density.clamped(),
        });
    }
    out.table("profile.csv", |w| bias.write_csv(w))?;
    out.json("report.json", "profile", &entries)?;

    println!(
        "{:>7} {:>8} {:>8} {:>6}",
        "spread", "p_home", "entropy", "n"
    );
    for e in &bias.entries {
        let mark = if e.entropy_bits < bias.threshold {
            " *"
        } else {
            ""
        };
        println!(
            "{:>7} {:>8.4} {:>8.4} {:>6}{mark}",
            e.spread.to_string(),
            e.p_home,
            e.entropy_bits,
            e.n_train
        );
    }
    report_written(&out.write()?);
    Ok(())
}

fn print_summary(report: &EvaluationReport) {
    println!(
        "{} valid spreads, {} test samples",
        report.valid_spreads.len(),
        report.n_test_samples
    );
    for row in report.summary_rows() {
        let pct = row
            .ats_win_pct
            .map_or("no wagers".to_string(), |p| format!("{p:.2}%"));
        let sem = row.sem.map_or(String::new(), |s| format!(" (SEM {s:.2})"));
        println!("{:<16} {pct:>10}{sem}  n={}", row.label, row.n_test);
    }
}

fn evaluation_outputs(out: &mut Outputs, report: &EvaluationReport) -> Result<()> {
    out.json("report.json", "report", report)?;
    out.table("summary.csv", |w| report.write_summary_csv(w))?;
    out.table("profile.csv", |w| report.write_profile_csv(w))?;
    if report.k_sweep.is_some() {
        out.table("ksweep.csv", |w| report.write_sweep_csv(w))?;
    }
    Ok(())
}

fn simulate_ti(args: &Common) -> Result<()> {
    let cfg = Resolved::new(args)?.ti()?;
    let bytes = read_input(&args.input)?;
    let dataset = load_dataset(&bytes, &args.input)?;
    let report = run_ti(&dataset, &cfg).map_err(no_spread_hint)?;

    let mut out = Outputs::new(
        &args.out_dir,
        RunManifest::new("simulate-ti", &cfg, &args.input, &bytes)?,
    );
    evaluation_outputs(&mut out, &report)?;
    print_summary(&report);
    report_written(&out.write()?);
    Ok(())
}

fn backtest_td(args: &Common) -> Result<()> {
    let cfg = Resolved::new(args)?.td()?;
    let bytes = read_input(&args.input)?;
    let dataset = load_dataset(&bytes, &args.input)?;
    let report = run_td(&dataset, &cfg).map_err(no_spread_hint)?;
    if report.n_test_samples == 0 {
        bail!("no test games fall on a valid spread");
    }

    let mut out = Outputs::new(
        &args.out_dir,
        RunManifest::new("backtest-td", &cfg, &args.input, &bytes)?,
    );
    evaluation_outputs(&mut out, &report)?;
    print_summary(&report);
    report_written(&out.write()?);
    Ok(())
}
