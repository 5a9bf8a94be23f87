#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use atsbias::data::write_games;
use atsbias::{Dataset, GameRecord, Spread};
use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One synthetic spread: its quote in tenths and the chance the home side covers.
#[derive(Debug, Clone, Copy)]
pub struct Planted {
    pub spread_tenths: i32,
    pub p_home_cover: f64,
}

/// Games at half-point spreads whose outcomes land `0..=12` points past the
/// spread on the covering side, so the side that covers is drawn with exactly
/// the planted probability and a fair spread is symmetric about its quote.
pub fn synthetic_games(planted: &[Planted], per_spread: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2014, 9, 1).unwrap();
    let mut records = Vec::with_capacity(planted.len() * per_spread);
    for (s, p) in planted.iter().enumerate() {
        assert!(p.spread_tenths % 10 != 0, "half-point spreads only");
        let below = p.spread_tenths.div_euclid(10);
        for i in 0..per_spread {
            let u: i32 = rng.gen_range(0..=12);
            let outcome = if rng.gen::<f64>() < p.p_home_cover {
                below - u
            } else {
                below + 1 + u
            };
            let (home_score, visitor_score) = if outcome >= 0 {
                (17, 17 + outcome as u32)
            } else {
                (17 + (-outcome) as u32, 17)
            };
            records.push(GameRecord {
                date: start + Days::new((i * 1400 / per_spread + s) as u64),
                home_team: format!("H{s}-{i}"),
                visitor_team: format!("V{s}-{i}"),
                home_score,
                visitor_score,
                spread: Spread::from_tenths(p.spread_tenths),
            });
        }
    }
    Dataset::new(records)
}

/// Ten spreads, two of which (-2.5 and +3.5) strongly favour the home side.
pub fn two_biased_spreads() -> Vec<Planted> {
    [-105, -75, -65, -35, -25, -15, 15, 25, 35, 65]
        .into_iter()
        .map(|t| Planted {
            spread_tenths: t,
            p_home_cover: if t == -25 || t == 35 { 0.85 } else { 0.5 },
        })
        .collect()
}

pub fn write_dataset(dir: &Path, name: &str, d: &Dataset) -> PathBuf {
    let path = dir.join(name);
    let mut buf = Vec::new();
    write_games(&mut buf, d).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

pub fn atsbias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atsbias"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// File content without the leading `# manifest:` line.
pub fn strip_manifest(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# manifest:"))
        .collect::<Vec<_>>()
        .join("\n")
}
