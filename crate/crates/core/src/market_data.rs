//! Hourly market data ingestion and scenario calibration.
//!
//! Each calendar month becomes one [`Scenario`]: the baseline price profile is
//! the observed day closest (Euclidean) to the month's mean daily profile, and
//! the price-impact slope is the least-squares slope of price on net demand
//! over every hour of the month, applied uniformly to all slots.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hours in a calendar day; calibrated scenarios always have this many slots.
pub const HOURS_PER_DAY: usize = 24;

const PROBABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("header has no column named `{0}`")]
    MissingColumn(String),
    #[error("no valid records")]
    EmptyData,
    #[error(
        "month {month}: net demand is constant or has fewer than two points, slope is undefined"
    )]
    DegenerateRegression { month: MonthKey },
    #[error("month {month}: fitted slope {slope} is not positive")]
    NonPositiveSlope { month: MonthKey, slope: f64 },
    #[error("month {month}: no day has all {HOURS_PER_DAY} hours")]
    NoCompleteDay { month: MonthKey },
    #[error("invalid scenario set: {0}")]
    InvalidScenarioSet(String),
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Calendar month used to group records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthKey {
    pub year: i32,
    pub month: u32,
}

impl MonthKey {
    pub fn of(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month(),
        }
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| format!("expected YYYY-MM, got `{s}`"))?;
        let year = y.parse().map_err(|_| format!("bad year in `{s}`"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in `{s}`"))?;
        if !(1..=12).contains(&month) {
            return Err(format!("month out of range in `{s}`"));
        }
        Ok(Self { year, month })
    }
}

/// One hour of market data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HourlyRecord {
    pub date: NaiveDate,
    /// Hour of day, 0..=23.
    pub hour: u8,
    /// Price in currency/MWh; may be negative.
    pub price: f64,
    /// System demand minus renewable output, MWh.
    pub net_demand: f64,
}

impl HourlyRecord {
    pub fn month(&self) -> MonthKey {
        MonthKey::of(self.date)
    }

    fn stamp(&self) -> (NaiveDate, u8) {
        (self.date, self.hour)
    }
}

/// Column names for [`load_market_csv_with`].
#[derive(Clone, Debug)]
pub struct CsvColumns {
    pub timestamp: String,
    pub price: String,
    pub net_demand: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            price: "price".into(),
            net_demand: "net_demand".into(),
        }
    }
}

/// Parses `YYYY-MM-DD HH` or an ISO-8601 date-time on the hour.
pub fn parse_timestamp(raw: &str) -> Result<(NaiveDate, u8), String> {
    let raw = raw.trim();
    if let Some((date, hour)) = raw.split_once(' ') {
        if hour.len() <= 2 && hour.chars().all(|c| c.is_ascii_digit()) {
            let date = NaiveDate::parse_from_str(date, "%Y-%m-%d")
                .map_err(|e| format!("bad date `{date}`: {e}"))?;
            let hour: u8 = hour.parse().map_err(|_| format!("bad hour `{hour}`"))?;
            if hour > 23 {
                return Err(format!("hour {hour} out of range"));
            }
            return Ok((date, hour));
        }
    }
    let dt = if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(raw) {
        dt.naive_local()
    } else {
        [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%d %H:%M",
        ]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .ok_or_else(|| format!("unrecognized timestamp `{raw}`"))?
    };
    if dt.minute() != 0 || dt.second() != 0 {
        return Err(format!("timestamp `{raw}` is not on the hour"));
    }
    Ok((dt.date(), dt.hour() as u8))
}

pub fn load_market_csv(path: impl AsRef<Path>) -> Result<Vec<HourlyRecord>, MarketDataError> {
    load_market_csv_with(path, &CsvColumns::default())
}

pub fn load_market_csv_with(
    path: impl AsRef<Path>,
    columns: &CsvColumns,
) -> Result<Vec<HourlyRecord>, MarketDataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            MarketDataError::FileNotFound(path.to_path_buf())
        } else {
            MarketDataError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    parse_market_csv(file, columns)
}

/// Parses market CSV text from any reader. Line numbers in errors are 1-based
/// file lines, the header being line 1.
pub fn parse_market_csv<R: Read>(
    reader: R,
    columns: &CsvColumns,
) -> Result<Vec<HourlyRecord>, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| MarketDataError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MarketDataError::MissingColumn(name.to_string()))
    };
    let (ts_col, price_col, nd_col) = (
        col(&columns.timestamp)?,
        col(&columns.price)?,
        col(&columns.net_demand)?,
    );

    let mut records = Vec::new();
    let mut lines = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| MarketDataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| MarketDataError::Parse { line, message };
        let field = |idx: usize, name: &str| {
            row.get(idx)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| bad(format!("missing {name}")))
        };
        let (date, hour) = parse_timestamp(field(ts_col, "timestamp")?).map_err(bad)?;
        let number = |idx: usize, name: &str| -> Result<f64, MarketDataError> {
            let raw = field(idx, name)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("{name} `{raw}` is not a finite number")))
        };
        let price = number(price_col, "price")?;
        let net_demand = number(nd_col, "net_demand")?;
        records.push(HourlyRecord {
            date,
            hour,
            price,
            net_demand,
        });
        lines.push(line);
    }
    if records.is_empty() {
        return Err(MarketDataError::EmptyData);
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&k| (records[k].stamp(), lines[k]));
    for pair in order.windows(2) {
        if records[pair[0]].stamp() == records[pair[1]].stamp() {
            return Err(MarketDataError::Parse {
                line: lines[pair[1]],
                message: format!(
                    "duplicate timestamp {} {:02}",
                    records[pair[1]].date, records[pair[1]].hour
                ),
            });
        }
    }
    Ok(order.into_iter().map(|k| records[k]).collect())
}

/// Result of regressing price on net demand for one month.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

impl SlopeFit {
    /// A non-positive slope cannot enter an equilibrium run.
    pub fn is_non_positive(&self) -> bool {
        self.slope <= 0.0
    }
}

fn month_records(records: &[HourlyRecord], month: MonthKey) -> Vec<HourlyRecord> {
    let mut out: Vec<_> = records
        .iter()
        .filter(|r| r.month() == month)
        .copied()
        .collect();
    out.sort_by_key(HourlyRecord::stamp);
    out
}

/// Ordinary least squares of price on net demand over every hour of `month`.
pub fn fit_price_slope(
    records: &[HourlyRecord],
    month: MonthKey,
) -> Result<SlopeFit, MarketDataError> {
    let rows = month_records(records, month);
    if rows.len() < 2 {
        return Err(MarketDataError::DegenerateRegression { month });
    }
    let n = rows.len() as f64;
    let mean_x = rows.iter().map(|r| r.net_demand).sum::<f64>() / n;
    let mean_y = rows.iter().map(|r| r.price).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for r in &rows {
        let dx = r.net_demand - mean_x;
        sxy += dx * (r.price - mean_y);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(MarketDataError::DegenerateRegression { month });
    }
    let slope = sxy / sxx;
    Ok(SlopeFit {
        slope,
        intercept: mean_y - slope * mean_x,
        points: rows.len(),
    })
}

/// The observed day chosen to represent a month.
#[derive(Clone, Debug, PartialEq)]
pub struct RepresentativeDay {
    pub date: NaiveDate,
    pub profile: Vec<f64>,
    /// Euclidean distance to the month's mean profile.
    pub distance: f64,
    /// Number of complete days the mean was taken over.
    pub complete_days: usize,
}

/// Complete days of `month` in date order, as hour-indexed price profiles.
fn complete_days(records: &[HourlyRecord], month: MonthKey) -> Vec<(NaiveDate, Vec<f64>)> {
    let mut days: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.month() == month) {
        if (r.hour as usize) < HOURS_PER_DAY {
            days.entry(r.date)
                .or_insert_with(|| vec![None; HOURS_PER_DAY])[r.hour as usize] = Some(r.price);
        }
    }
    days.into_iter()
        .filter_map(|(date, hours)| {
            hours
                .into_iter()
                .collect::<Option<Vec<f64>>>()
                .map(|p| (date, p))
        })
        .collect()
}

/// Picks the complete day whose price profile is closest to the month's
/// hour-wise mean; ties go to the earliest date.
pub fn select_representative_day(
    records: &[HourlyRecord],
    month: MonthKey,
) -> Result<RepresentativeDay, MarketDataError> {
    let days = complete_days(records, month);
    if days.is_empty() {
        return Err(MarketDataError::NoCompleteDay { month });
    }
    let mut mean = vec![0.0; HOURS_PER_DAY];
    for (_, profile) in &days {
        for (m, p) in mean.iter_mut().zip(profile) {
            *m += p;
        }
    }
    mean.iter_mut().for_each(|m| *m /= days.len() as f64);

    let mut best: Option<(f64, usize)> = None;
    for (k, (_, profile)) in days.iter().enumerate() {
        let d = profile
            .iter()
            .zip(&mean)
            .map(|(p, m)| (p - m) * (p - m))
            .sum::<f64>()
            .sqrt();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, k));
        }
    }
    let (distance, k) = best.expect("nonempty");
    let complete_days = days.len();
    let (date, profile) = days.into_iter().nth(k).expect("index in range");
    Ok(RepresentativeDay {
        date,
        profile,
        distance,
        complete_days,
    })
}

/// One representative day with its price-impact slope and probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Price without storage, per slot (currency/MWh).
    #[serde(rename = "pi0")]
    pub baseline: Vec<f64>,
    /// Price drop per MW of net discharge, per slot.
    #[serde(rename = "a")]
    pub slope: Vec<f64>,
    #[serde(rename = "rho")]
    pub probability: f64,
}

impl Scenario {
    /// Scenario with the same slope in every slot.
    pub fn uniform(
        id: impl Into<String>,
        baseline: Vec<f64>,
        slope: f64,
        probability: f64,
    ) -> Self {
        let slots = baseline.len();
        Self {
            id: id.into(),
            baseline,
            slope: vec![slope; slots],
            probability,
        }
    }

    pub fn slots(&self) -> usize {
        self.baseline.len()
    }

    /// Largest minus smallest baseline price.
    pub fn baseline_spread(&self) -> f64 {
        spread(&self.baseline)
    }
}

pub(crate) fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// Validated, nonempty set of scenarios sharing one slot count, with
/// probabilities summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenarioSet")]
pub struct ScenarioSet {
    #[serde(rename = "T")]
    slots: usize,
    scenarios: Vec<Scenario>,
}

#[derive(Deserialize)]
struct RawScenarioSet {
    #[serde(rename = "T")]
    slots: Option<usize>,
    scenarios: Vec<Scenario>,
}

impl TryFrom<RawScenarioSet> for ScenarioSet {
    type Error = MarketDataError;

    fn try_from(raw: RawScenarioSet) -> Result<Self, Self::Error> {
        let set = ScenarioSet::new(raw.scenarios)?;
        if let Some(t) = raw.slots {
            if t != set.slots {
                return Err(MarketDataError::InvalidScenarioSet(format!(
                    "T = {t} but scenarios have {} slots",
                    set.slots
                )));
            }
        }
        Ok(set)
    }
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self, MarketDataError> {
        let invalid = |m: String| Err(MarketDataError::InvalidScenarioSet(m));
        let Some(first) = scenarios.first() else {
            return invalid("no scenarios".into());
        };
        let slots = first.slots();
        if slots == 0 {
            return invalid("scenarios have zero slots".into());
        }
        for s in &scenarios {
            if s.baseline.len() != slots || s.slope.len() != slots {
                return invalid(format!("scenario {} does not have {slots} slots", s.id));
            }
            if s.baseline.iter().any(|v| !v.is_finite()) {
                return invalid(format!("scenario {} has a non-finite price", s.id));
            }
            if let Some(a) = s.slope.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
                return invalid(format!("scenario {} has non-positive slope {a}", s.id));
            }
            if !(s.probability > 0.0 && s.probability <= 1.0) {
                return invalid(format!(
                    "scenario {} has probability {}",
                    s.id, s.probability
                ));
            }
        }
        let total: f64 = scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return invalid(format!("probabilities sum to {total}"));
        }
        Ok(Self { slots, scenarios })
    }

    /// Single scenario with probability one.
    pub fn single(scenario: Scenario) -> Result<Self, MarketDataError> {
        Self::new(vec![Scenario {
            probability: 1.0,
            ..scenario
        }])
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    /// Direct access that skips validation. Callers that rely on positive
    /// slopes must check them again.
    pub fn scenarios_mut_unchecked(&mut self) -> &mut [Scenario] {
        &mut self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Scenario> {
        self.scenarios.iter()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MarketDataError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MarketDataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                MarketDataError::FileNotFound(path.to_path_buf())
            } else {
                MarketDataError::Io {
                    path: path.to_path_buf(),
                    source,
                }
            }
        })?;
        Self::from_json(&text)
    }
}

impl<'a> IntoIterator for &'a ScenarioSet {
    type Item = &'a Scenario;
    type IntoIter = std::slice::Iter<'a, Scenario>;

    fn into_iter(self) -> Self::IntoIter {
        self.scenarios.iter()
    }
}

/// Per-month calibration details, kept alongside the scenario set for reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct MonthCalibration {
    pub month: MonthKey,
    pub fit: SlopeFit,
    pub representative: RepresentativeDay,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub scenarios: ScenarioSet,
    pub months: Vec<MonthCalibration>,
}

/// Builds one scenario per calendar month present in `records`.
pub fn calibrate(records: &[HourlyRecord]) -> Result<Calibration, MarketDataError> {
    let mut months: Vec<MonthKey> = records.iter().map(HourlyRecord::month).collect();
    months.sort();
    months.dedup();
    if months.is_empty() {
        return Err(MarketDataError::EmptyData);
    }
    let probability = 1.0 / months.len() as f64;
    let mut details = Vec::with_capacity(months.len());
    let mut scenarios = Vec::with_capacity(months.len());
    for month in months {
        let fit = fit_price_slope(records, month)?;
        if fit.is_non_positive() {
            return Err(MarketDataError::NonPositiveSlope {
                month,
                slope: fit.slope,
            });
        }
        let representative = select_representative_day(records, month)?;
        scenarios.push(Scenario::uniform(
            month.to_string(),
            representative.profile.clone(),
            fit.slope,
            probability,
        ));
        details.push(MonthCalibration {
            month,
            fit,
            representative,
        });
    }
    Ok(Calibration {
        scenarios: ScenarioSet::new(scenarios)?,
        months: details,
    })
}

pub fn build_scenarios(records: &[HourlyRecord]) -> Result<ScenarioSet, MarketDataError> {
    calibrate(records).map(|c| c.scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(day: u32, hour: u8, price: f64, net_demand: f64) -> HourlyRecord {
        HourlyRecord {
            date: NaiveDate::from_ymd_opt(2019, 1, day).unwrap(),
            hour,
            price,
            net_demand,
        }
    }

    const JAN: MonthKey = MonthKey {
        year: 2019,
        month: 1,
    };

    fn full_day(day: u32, price: impl Fn(usize) -> f64) -> Vec<HourlyRecord> {
        (0..24)
            .map(|h| rec(day, h as u8, price(h), 1000.0 + h as f64))
            .collect()
    }

    #[test]
    fn timestamp_formats() {
        let d = NaiveDate::from_ymd_opt(2019, 3, 4).unwrap();
        assert_eq!(parse_timestamp("2019-03-04 07").unwrap(), (d, 7));
        assert_eq!(parse_timestamp("2019-03-04T07:00:00").unwrap(), (d, 7));
        assert_eq!(parse_timestamp("2019-03-04T07:00").unwrap(), (d, 7));
        assert_eq!(
            parse_timestamp("2019-03-04T07:00:00-08:00").unwrap(),
            (d, 7)
        );
        assert!(parse_timestamp("2019-03-04 24").is_err());
        assert!(parse_timestamp("2019-03-04T07:30:00").is_err());
        assert!(parse_timestamp("yesterday").is_err());
    }

    #[test]
    fn csv_rows_come_back_sorted() {
        let text = "timestamp,price,net_demand\n\
                    2019-01-01 02,12,3\n\
                    2019-01-01 00,10,1\n\
                    2019-01-01 01,11,2\n";
        let recs = parse_market_csv(text.as_bytes(), &CsvColumns::default()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs.iter().map(|r| r.hour).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(recs[0].price, 10.0);
    }

    #[test]
    fn non_numeric_price_reports_line() {
        let text = "timestamp,price,net_demand\n\
                    2019-01-01 00,10,1\n\
                    2019-01-01 01,11,2\n\
                    2019-01-01 02,12,3\n\
                    2019-01-01 03,abc,4\n";
        let err = parse_market_csv(text.as_bytes(), &CsvColumns::default()).unwrap_err();
        assert!(
            matches!(err, MarketDataError::Parse { line: 5, .. }),
            "{err}"
        );
    }

    #[test]
    fn missing_field_and_duplicates_rejected() {
        let text = "timestamp,price,net_demand\n2019-01-01 00,,1\n";
        let err = parse_market_csv(text.as_bytes(), &CsvColumns::default()).unwrap_err();
        assert!(matches!(err, MarketDataError::Parse { line: 2, .. }));

        let text = "timestamp,price,net_demand\n2019-01-01 00,1,1\n2019-01-01 00,2,2\n";
        let err = parse_market_csv(text.as_bytes(), &CsvColumns::default()).unwrap_err();
        assert!(matches!(err, MarketDataError::Parse { line: 3, .. }));
    }

    #[test]
    fn empty_and_missing_inputs() {
        let err = parse_market_csv(
            "timestamp,price,net_demand\n".as_bytes(),
            &CsvColumns::default(),
        )
        .unwrap_err();
        assert!(matches!(err, MarketDataError::EmptyData));
        let err = parse_market_csv("ts,price,net_demand\n".as_bytes(), &CsvColumns::default())
            .unwrap_err();
        assert!(matches!(err, MarketDataError::MissingColumn(c) if c == "timestamp"));
        let err = load_market_csv("/definitely/not/here.csv").unwrap_err();
        assert!(matches!(err, MarketDataError::FileNotFound(_)));
    }

    #[test]
    fn remapped_columns() {
        let text = "when,lmp,nd\n2019-01-01 00,10,1\n";
        let cols = CsvColumns {
            timestamp: "when".into(),
            price: "lmp".into(),
            net_demand: "nd".into(),
        };
        assert_eq!(parse_market_csv(text.as_bytes(), &cols).unwrap().len(), 1);
    }

    #[test]
    fn two_point_slope() {
        let recs = [rec(1, 0, 10.0, 0.0), rec(1, 1, 12.0, 1.0)];
        let fit = fit_price_slope(&recs, JAN).unwrap();
        assert_eq!(fit.slope, 2.0);
        assert_eq!(fit.intercept, 10.0);
    }

    #[test]
    fn flat_prices_flag_non_positive() {
        let recs = [
            rec(1, 0, 5.0, 0.0),
            rec(1, 1, 5.0, 1.0),
            rec(1, 2, 5.0, 2.0),
        ];
        let fit = fit_price_slope(&recs, JAN).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert!(fit.is_non_positive());
    }

    #[test]
    fn constant_demand_is_degenerate() {
        let recs = [rec(1, 0, 5.0, 3.0), rec(1, 1, 7.0, 3.0)];
        assert!(matches!(
            fit_price_slope(&recs, JAN),
            Err(MarketDataError::DegenerateRegression { .. })
        ));
        assert!(matches!(
            fit_price_slope(&recs[..1], JAN),
            Err(MarketDataError::DegenerateRegression { .. })
        ));
    }

    #[test]
    fn singleton_month_returns_its_day() {
        let recs = full_day(3, |h| h as f64);
        let day = select_representative_day(&recs, JAN).unwrap();
        assert_eq!(day.date, NaiveDate::from_ymd_opt(2019, 1, 3).unwrap());
        assert_eq!(day.profile, (0..24).map(|h| h as f64).collect::<Vec<_>>());
        assert_eq!(day.distance, 0.0);
    }

    #[test]
    fn equidistant_days_pick_earliest() {
        let mut recs = full_day(9, |_| 30.0);
        recs.extend(full_day(2, |_| 10.0));
        let day = select_representative_day(&recs, JAN).unwrap();
        assert_eq!(day.date.day(), 2);
        assert_eq!(day.profile, vec![10.0; 24]);
    }

    #[test]
    fn incomplete_days_are_ignored() {
        let mut recs = full_day(1, |_| 10.0);
        recs.extend(full_day(2, |_| 50.0).into_iter().take(23));
        let day = select_representative_day(&recs, JAN).unwrap();
        assert_eq!(day.complete_days, 1);
        assert_eq!(day.date.day(), 1);

        let partial: Vec<_> = full_day(5, |_| 1.0).into_iter().skip(1).collect();
        assert!(matches!(
            select_representative_day(&partial, JAN),
            Err(MarketDataError::NoCompleteDay { .. })
        ));
    }

    #[test]
    fn scenario_set_validation() {
        let s = |p| Scenario::uniform("x", vec![1.0, 2.0], 0.1, p);
        assert!(ScenarioSet::new(vec![s(0.5), s(0.5)]).is_ok());
        assert!(ScenarioSet::new(vec![s(0.5), s(0.4)]).is_err());
        assert!(ScenarioSet::new(vec![]).is_err());
        let bad_slope = Scenario::uniform("y", vec![1.0, 2.0], 0.0, 1.0);
        assert!(ScenarioSet::new(vec![bad_slope]).is_err());
        let short = Scenario::uniform("z", vec![1.0], 0.1, 0.5);
        assert!(ScenarioSet::new(vec![s(0.5), short]).is_err());
    }

    #[test]
    fn scenario_json_shape() {
        let set =
            ScenarioSet::single(Scenario::uniform("2019-01", vec![20.0, 60.0], 0.1, 1.0)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&set.to_json()).unwrap();
        assert_eq!(v["T"], 2);
        assert_eq!(v["scenarios"][0]["id"], "2019-01");
        assert_eq!(v["scenarios"][0]["pi0"][1], 60.0);
        assert_eq!(v["scenarios"][0]["a"][0], 0.1);
        assert_eq!(v["scenarios"][0]["rho"], 1.0);
        assert_eq!(ScenarioSet::from_json(&set.to_json()).unwrap(), set);

        let bad = r#"{"T":2,"scenarios":[{"id":"a","pi0":[1,2],"a":[0.1,0.1],"rho":0.3}]}"#;
        assert!(ScenarioSet::from_json(bad).is_err());
    }

    #[test]
    fn month_key_roundtrip() {
        assert_eq!(JAN.to_string(), "2019-01");
        assert_eq!("2019-01".parse::<MonthKey>().unwrap(), JAN);
        assert!("2019-13".parse::<MonthKey>().is_err());
    }
}
