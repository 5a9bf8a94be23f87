//! Game records: parsing, de-duplication, bucketing by spread and date splits.
//!
//! Spreads are quoted on the (visitor − home) scale, the same scale as the
//! game outcome, so a negative spread means the home side is favoured.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Column names expected in the header of an input file.
pub const COLUMNS: [&str; 6] = [
    "date",
    "home_team",
    "visitor_team",
    "home_score",
    "visitor_score",
    "spread",
];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("conflicting duplicates for {date} {visitor_team} @ {home_team}: record {first} = {first_record}, record {second} = {second_record}")]
    DuplicateConflict {
        date: NaiveDate,
        home_team: String,
        visitor_team: String,
        first: usize,
        first_record: String,
        second: usize,
        second_record: String,
    },
    #[error("min_samples must be at least 1")]
    ZeroMinSamples,
    #[error("spread {0} is not finite or out of range")]
    BadSpread(f64),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A point spread held in tenths of a point.
///
/// Quotes are rounded to one decimal at construction so that grouping and
/// comparisons against integer outcomes are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spread(i32);

impl Spread {
    const LIMIT: f64 = 1.0e6;

    pub fn from_points(points: f64) -> Result<Self, DataError> {
        if !points.is_finite() || points.abs() > Self::LIMIT {
            return Err(DataError::BadSpread(points));
        }
        Ok(Spread((points * 10.0).round() as i32))
    }

    pub const fn from_tenths(tenths: i32) -> Self {
        Spread(tenths)
    }

    pub fn tenths(self) -> i32 {
        self.0
    }

    pub fn points(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    pub fn abs(self) -> Spread {
        Spread(self.0.abs())
    }

    /// Compares an integer outcome with this spread without leaving integers.
    pub fn cmp_outcome(self, outcome: Outcome) -> std::cmp::Ordering {
        (i64::from(outcome.0) * 10).cmp(&i64::from(self.0))
    }
}

impl fmt::Display for Spread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{}", a / 10, a % 10)
    }
}

impl Serialize for Spread {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.points())
    }
}

/// Visitor score minus home score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Outcome(pub i32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameRecord {
    pub date: NaiveDate,
    pub home_team: String,
    pub visitor_team: String,
    pub home_score: u32,
    pub visitor_score: u32,
    pub spread: Spread,
}

impl GameRecord {
    pub fn outcome(&self) -> Outcome {
        Outcome(self.visitor_score as i32 - self.home_score as i32)
    }

    fn key(&self) -> (NaiveDate, &str, &str) {
        (self.date, &self.home_team, &self.visitor_team)
    }
}

impl fmt::Display for GameRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.date,
            self.home_team,
            self.visitor_team,
            self.home_score,
            self.visitor_score,
            self.spread
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<GameRecord>,
}

impl Dataset {
    pub fn new(records: Vec<GameRecord>) -> Self {
        Dataset { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean of the quoted spreads, `None` for an empty dataset.
    pub fn spread_mean(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        let sum: f64 = self.records.iter().map(|r| r.spread.points()).sum();
        Some(sum / self.records.len() as f64)
    }
}

/// All historical outcomes observed at one spread value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadBucket {
    pub spread: Spread,
    pub outcomes: Vec<Outcome>,
}

impl SpreadBucket {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Reads comma-delimited game rows. Column order is free, names are fixed.
/// Lines starting with `#` are ignored.
pub fn parse_games<R: Read>(source: R) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let mut index = [0usize; 6];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or(DataError::MissingColumn(name))?;
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(index[i]).unwrap_or("");
        let err = |message: String| DataError::Row { row: line, message };

        let date = NaiveDate::parse_from_str(field(0), "%Y-%m-%d")
            .map_err(|e| err(format!("bad date `{}`: {e}", field(0))))?;
        let home_team = field(1).to_string();
        let visitor_team = field(2).to_string();
        if home_team.is_empty() || visitor_team.is_empty() {
            return Err(err("empty team identifier".into()));
        }
        let score = |i: usize| -> Result<u32, DataError> {
            field(i)
                .parse::<u32>()
                .map_err(|_| err(format!("bad {} `{}`", COLUMNS[i], field(i))))
        };
        let home_score = score(3)?;
        let visitor_score = score(4)?;
        let spread: f64 = field(5)
            .parse()
            .map_err(|_| err(format!("bad spread `{}`", field(5))))?;
        let spread =
            Spread::from_points(spread).map_err(|_| err(format!("bad spread `{}`", field(5))))?;

        records.push(GameRecord {
            date,
            home_team,
            visitor_team,
            home_score,
            visitor_score,
            spread,
        });
    }
    Ok(Dataset { records })
}

/// Writes a dataset in the same layout `parse_games` reads.
pub fn write_games<W: Write>(sink: W, dataset: &Dataset) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(COLUMNS)?;
    for r in &dataset.records {
        writer.write_record([
            r.date.to_string(),
            r.home_team.clone(),
            r.visitor_team.clone(),
            r.home_score.to_string(),
            r.visitor_score.to_string(),
            r.spread.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Keeps the first occurrence of each (date, home, visitor) game.
///
/// Exact repeats are dropped. A repeated key whose scores or spread differ is
/// reported as a conflict.
pub fn deduplicate(dataset: &Dataset) -> Result<Dataset, DataError> {
    let mut seen: HashMap<(NaiveDate, &str, &str), usize> = HashMap::new();
    let mut kept = Vec::with_capacity(dataset.len());
    for (i, record) in dataset.records.iter().enumerate() {
        match seen.entry(record.key()) {
            Entry::Vacant(slot) => {
                slot.insert(i);
                kept.push(record.clone());
            }
            Entry::Occupied(slot) => {
                let first = &dataset.records[*slot.get()];
                if first != record {
                    return Err(DataError::DuplicateConflict {
                        date: record.date,
                        home_team: record.home_team.clone(),
                        visitor_team: record.visitor_team.clone(),
                        first: *slot.get() + 1,
                        first_record: first.to_string(),
                        second: i + 1,
                        second_record: record.to_string(),
                    });
                }
            }
        }
    }
    Ok(Dataset { records: kept })
}

/// Groups outcomes by spread and keeps groups with at least `min_samples`.
///
/// Buckets come back sorted by spread; outcomes inside a bucket follow date
/// order (input order among same-day games).
pub fn bucket_by_spread(
    dataset: &Dataset,
    min_samples: usize,
) -> Result<Vec<SpreadBucket>, DataError> {
    if min_samples == 0 {
        return Err(DataError::ZeroMinSamples);
    }
    let mut ordered: Vec<&GameRecord> = dataset.records.iter().collect();
    ordered.sort_by_key(|r| r.date);

    let mut groups: BTreeMap<Spread, Vec<Outcome>> = BTreeMap::new();
    for r in ordered {
        groups.entry(r.spread).or_default().push(r.outcome());
    }
    Ok(groups
        .into_iter()
        .filter(|(_, outcomes)| outcomes.len() >= min_samples)
        .map(|(spread, outcomes)| SpreadBucket { spread, outcomes })
        .collect())
}

/// Splits on calendar year: games in `cutoff_year` or later go to the test side.
pub fn split_by_date(dataset: &Dataset, cutoff_year: i32) -> (Dataset, Dataset) {
    let (test, train): (Vec<_>, Vec<_>) = dataset
        .records
        .iter()
        .cloned()
        .partition(|r| r.date.year() >= cutoff_year);
    (Dataset { records: train }, Dataset { records: test })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "date,home_team,visitor_team,home_score,visitor_score,spread\n";

    fn game(date: &str, home: &str, visitor: &str, hs: u32, vs: u32, spread: f64) -> GameRecord {
        GameRecord {
            date: NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap(),
            home_team: home.into(),
            visitor_team: visitor.into(),
            home_score: hs,
            visitor_score: vs,
            spread: Spread::from_points(spread).unwrap(),
        }
    }

    #[test]
    fn parses_a_row() {
        let text = format!("{HEADER}2017-09-10,NE,KC,27,42,-9.0\n");
        let d = parse_games(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 1);
        let r = &d.records[0];
        assert_eq!(r.outcome(), Outcome(15));
        assert_eq!(r.spread, Spread::from_tenths(-90));
        assert_eq!(r.home_team, "NE");
    }

    #[test]
    fn column_order_is_free() {
        let text = "spread,visitor_score,home_score,visitor_team,home_team,date\n-2.5,10,17,KC,NE,2016-01-03\n";
        let d = parse_games(text.as_bytes()).unwrap();
        assert_eq!(d.records[0], game("2016-01-03", "NE", "KC", 17, 10, -2.5));
    }

    #[test]
    fn negative_score_reports_row() {
        let text = format!("{HEADER}2017-09-10,NE,KC,27,42,-9\n2017-09-11,NYG,DAL,-3,10,3\n");
        match parse_games(text.as_bytes()) {
            Err(DataError::Row { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn bad_date_and_spread_are_row_errors() {
        let text = format!("{HEADER}2017-13-10,NE,KC,27,42,-9\n");
        assert!(matches!(
            parse_games(text.as_bytes()),
            Err(DataError::Row { row: 2, .. })
        ));
        let text = format!("{HEADER}2017-10-10,NE,KC,27,42,pk\n");
        assert!(matches!(
            parse_games(text.as_bytes()),
            Err(DataError::Row { row: 2, .. })
        ));
        let text = format!("{HEADER}2017-10-10,NE,KC,27,42,inf\n");
        assert!(matches!(
            parse_games(text.as_bytes()),
            Err(DataError::Row { row: 2, .. })
        ));
    }

    #[test]
    fn missing_column_is_schema_error() {
        let text = "date,home_team,visitor_team,home_score,visitor_score\n";
        assert!(matches!(
            parse_games(text.as_bytes()),
            Err(DataError::MissingColumn("spread"))
        ));
    }

    #[test]
    fn comment_lines_are_skipped() {
        let text = format!("# manifest\n{HEADER}# note\n2017-09-10,NE,KC,27,42,-9.0\n");
        assert_eq!(parse_games(text.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn header_only_is_empty() {
        let d = parse_games(HEADER.as_bytes()).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.spread_mean(), None);
    }

    #[test]
    fn spreads_round_to_tenths() {
        assert_eq!(
            Spread::from_points(-2.5000001).unwrap(),
            Spread::from_tenths(-25)
        );
        assert_eq!(Spread::from_points(3.04).unwrap().to_string(), "3.0");
        assert_eq!(Spread::from_tenths(-5).to_string(), "-0.5");
    }

    #[test]
    fn dedup_drops_exact_repeats() {
        let a = game("2016-01-03", "NE", "KC", 17, 10, -2.5);
        let b = game("2016-01-04", "NYG", "DAL", 20, 21, 3.0);
        let d = Dataset::new(vec![a.clone(), b.clone(), a.clone(), b.clone(), a.clone()]);
        assert_eq!(deduplicate(&d).unwrap().records, vec![a, b]);
    }

    #[test]
    fn dedup_without_duplicates_is_identity() {
        let d = Dataset::new(vec![
            game("2016-01-03", "NE", "KC", 17, 10, -2.5),
            game("2016-01-03", "KC", "NE", 17, 10, -2.5),
        ]);
        assert_eq!(deduplicate(&d).unwrap(), d);
    }

    #[test]
    fn dedup_conflict_lists_both_rows() {
        let d = Dataset::new(vec![
            game("2016-01-03", "NE", "KC", 17, 10, -2.5),
            game("2016-01-03", "NE", "KC", 17, 10, -3.0),
        ]);
        let err = deduplicate(&d).unwrap_err();
        match &err {
            DataError::DuplicateConflict { first, second, .. } => {
                assert_eq!((*first, *second), (1, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
        let msg = err.to_string();
        assert!(msg.contains("-2.5") && msg.contains("-3.0"));
    }

    #[test]
    fn buckets_below_threshold_are_dropped() {
        let d = Dataset::new(
            (1..=3)
                .map(|day| game(&format!("2016-01-0{day}"), "NE", "KC", 20, 17, -2.5))
                .collect(),
        );
        assert!(bucket_by_spread(&d, 4).unwrap().is_empty());
        assert_eq!(bucket_by_spread(&d, 3).unwrap().len(), 1);
        assert!(matches!(
            bucket_by_spread(&d, 0),
            Err(DataError::ZeroMinSamples)
        ));
        assert!(bucket_by_spread(&Dataset::default(), 1).unwrap().is_empty());
    }

    #[test]
    fn buckets_sorted_by_spread_outcomes_by_date() {
        let d = Dataset::new(vec![
            game("2016-02-01", "A", "B", 10, 13, 3.0),
            game("2016-01-01", "A", "B", 10, 20, 3.0),
            game("2016-01-05", "C", "D", 24, 10, -7.0),
        ]);
        let buckets = bucket_by_spread(&d, 1).unwrap();
        assert_eq!(buckets[0].spread, Spread::from_tenths(-70));
        assert_eq!(buckets[1].outcomes, vec![Outcome(10), Outcome(3)]);
    }

    #[test]
    fn split_edges() {
        let d = Dataset::new(vec![
            game("2015-10-01", "A", "B", 1, 2, 1.0),
            game("2017-10-01", "A", "B", 1, 2, 1.0),
        ]);
        let (train, test) = split_by_date(&d, 2017);
        assert_eq!((train.len(), test.len()), (1, 1));
        let (train, test) = split_by_date(&d, 2030);
        assert_eq!((train, test.len()), (d.clone(), 0));
        let (train, test) = split_by_date(&d, 1990);
        assert_eq!((train.len(), test), (0, d.clone()));
    }

    #[test]
    fn write_then_parse() {
        let d = Dataset::new(vec![
            game("2015-10-01", "A", "B", 1, 2, -1.5),
            game("2017-10-01", "C", "D", 30, 2, 10.0),
        ]);
        let mut buf = Vec::new();
        write_games(&mut buf, &d).unwrap();
        assert_eq!(parse_games(buf.as_slice()).unwrap(), d);
    }
}
