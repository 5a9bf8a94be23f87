use atsbias::harness::{run_td, run_ti, HarnessError, TdConfig, TiConfig, TiSelection};
use atsbias::{Dataset, GameRecord, Model, Spread};
use chrono::{Days, NaiveDate};

fn game(n: usize, year: i32, spread_tenths: i32, outcome: i32) -> GameRecord {
    let (home_score, visitor_score) = if outcome >= 0 {
        (20, 20 + outcome as u32)
    } else {
        (20 + outcome.unsigned_abs(), 20)
    };
    GameRecord {
        date: NaiveDate::from_ymd_opt(year, 9, 1).unwrap() + Days::new((n % 120) as u64),
        home_team: format!("H{n}"),
        visitor_team: format!("V{n}"),
        home_score,
        visitor_score,
        spread: Spread::from_tenths(spread_tenths),
    }
}

/// Buckets whose outcomes are exactly mirrored about each spread.
fn mirrored(spreads: &[i32], pairs: usize, year: i32, offset: usize) -> Vec<GameRecord> {
    let mut out = Vec::new();
    let mut n = offset;
    for &s in spreads {
        let below = s.div_euclid(10);
        for i in 0..pairs {
            let d = (i % 9) as i32;
            out.push(game(n, year, s, below - d));
            out.push(game(n + 1, year, s, below + 1 + d));
            n += 2;
        }
    }
    out
}

/// 26 games at each integer spread with a share of exact pushes.
fn with_pushes() -> Dataset {
    let mut records = Vec::new();
    let mut n = 0;
    for s in [-30, 30, -70] {
        for i in 0..26 {
            let o = match i % 4 {
                0 => s / 10,
                1 => s / 10 - 4,
                2 => s / 10 - 9,
                _ => s / 10 + 5,
            };
            records.push(game(n, 2015, s, o));
            n += 1;
        }
    }
    Dataset::new(records)
}

#[test]
fn symmetric_buckets_select_no_spreads() {
    let mut records = mirrored(&[-25, 35, 65], 10, 2015, 0);
    records.extend(mirrored(&[-25, 35], 2, 2017, 1000));
    let r = run_td(&Dataset::new(records), &TdConfig::default()).unwrap();
    assert!(r.profile.iter().all(|p| p.entropy_bits > 0.999));
    let k = r.model(Model::KLowestEntropy).unwrap();
    assert_eq!(k.k, Some(0));
    assert_eq!(k.ats_win_pct, None);
    assert_eq!(k.n_test, 0);
    assert_eq!(r.k_selected.get(&0), Some(&1));
}

#[test]
fn ti_counts_match_the_holdout_design() {
    let cfg = TiConfig {
        n_simulations: 30,
        seed: 4,
        ..TiConfig::default()
    };
    let r = run_ti(&with_pushes(), &cfg).unwrap();
    assert_eq!(r.valid_spreads.len(), 3);
    assert_eq!(r.n_test_samples, 3 * 10 * 30);
    let random = r.model(Model::RandomGuess).unwrap();
    let max_prob = r.model(Model::MaxProbability).unwrap();
    assert!(random.n_push > 0);
    for m in [random, max_prob] {
        assert_eq!(m.n_test + m.n_push, r.n_test_samples);
    }
    let min = r.model(Model::MinEntropy).unwrap();
    assert_eq!(min.n_test + min.n_push, 10 * 30);
    assert!(r.profile.iter().all(|p| p.n_train == 16 && p.n_test == 300));
    assert_eq!(r.k_selected.values().sum::<usize>(), 30);
}

#[test]
fn ti_is_reproducible_and_independent_of_thread_count() {
    let cfg = TiConfig {
        n_simulations: 50,
        seed: 99,
        ..TiConfig::default()
    };
    let d = with_pushes();
    let a = run_ti(&d, &cfg).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let b = single.install(|| run_ti(&d, &cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );

    let other = run_ti(&d, &TiConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(a.model(Model::RandomGuess), other.model(Model::RandomGuess));
}

#[test]
fn pooled_selection_is_constant_across_simulations() {
    let cfg = TiConfig {
        n_simulations: 20,
        selection: TiSelection::PooledMean,
        ..TiConfig::default()
    };
    let r = run_ti(&with_pushes(), &cfg).unwrap();
    assert_eq!(r.k_selected.len(), 1);
}

#[test]
fn ti_rejects_bad_configs() {
    let d = with_pushes();
    let too_much_holdout = TiConfig {
        holdout_per_spread: 25,
        ..TiConfig::default()
    };
    assert!(matches!(
        run_ti(&d, &too_much_holdout),
        Err(HarnessError::Config(_))
    ));
    let strict = TiConfig {
        min_samples: 100,
        ..TiConfig::default()
    };
    assert!(matches!(
        run_ti(&d, &strict),
        Err(HarnessError::NoValidSpreads(100))
    ));
}

#[test]
fn td_sweep_is_consistent() {
    // Three training spreads with increasing home bias; the test season mirrors them.
    let mut records = Vec::new();
    let mut n = 0;
    for (s, home_share) in [(-25, 9), (35, 6), (65, 5)] {
        for year in [2015, 2017] {
            for i in 0..20 {
                let below = i32::div_euclid(s, 10);
                let o = if i % 10 < home_share {
                    below - 3
                } else {
                    below + 4
                };
                records.push(game(n, year, s, o));
                n += 1;
            }
        }
    }
    let r = run_td(&Dataset::new(records), &TdConfig::default()).unwrap();
    let sweep = r.k_sweep.as_ref().unwrap();
    assert_eq!(sweep.len(), 3);
    assert!(sweep.windows(2).all(|w| w[0].n_test <= w[1].n_test));
    let min = r.model(Model::MinEntropy).unwrap();
    assert_eq!(sweep[0].ats_win_pct, min.ats_win_pct);
    assert_eq!(sweep[0].n_test, min.n_test);
    assert_eq!(sweep[0].spreads, vec![Spread::from_tenths(-25)]);
    assert_eq!(min.ats_win_pct, Some(90.0));
    let last = sweep.last().unwrap();
    let max_prob = r.model(Model::MaxProbability).unwrap();
    assert_eq!(
        (last.ats_win_pct, last.n_test),
        (max_prob.ats_win_pct, max_prob.n_test)
    );
    assert_eq!(sweep.iter().filter(|row| row.threshold_selected).count(), 1);

    let rows = r.summary_rows();
    let labels: Vec<&str> = rows.iter().map(|row| row.label.as_str()).collect();
    assert_eq!(
        labels,
        [
            "Random",
            "Max-Prob",
            "Min-Ent",
            "2-Lowest Ent",
            "3-Lowest Ent"
        ]
    );
}
