//! Hourly observation ingestion, gap repair, outlier screening and
//! chronological splitting.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Number of meteorological variables carried by a record.
pub const VARIABLE_COUNT: usize = 7;

/// The raw meteorological variables, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Temp,
    Humidity,
    Precip,
    Windspeed,
    Sealevelpressure,
    Cloudcover,
    Solarradiation,
}

impl Variable {
    pub const ALL: [Variable; VARIABLE_COUNT] = [
        Variable::Temp,
        Variable::Humidity,
        Variable::Precip,
        Variable::Windspeed,
        Variable::Sealevelpressure,
        Variable::Cloudcover,
        Variable::Solarradiation,
    ];

    /// Column name used in CSV headers and feature names.
    pub const fn name(self) -> &'static str {
        match self {
            Variable::Temp => "temp",
            Variable::Humidity => "humidity",
            Variable::Precip => "precip",
            Variable::Windspeed => "windspeed",
            Variable::Sealevelpressure => "sealevelpressure",
            Variable::Cloudcover => "cloudcover",
            Variable::Solarradiation => "solarradiation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Name of the timestamp column in raw input rows.
pub const DATETIME_COLUMN: &str = "datetime";

/// One hourly observation. Values are `None` until repaired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub timestamp: NaiveDateTime,
    pub values: [Option<f64>; VARIABLE_COUNT],
}

impl ObservationRecord {
    pub fn new(timestamp: NaiveDateTime, values: [Option<f64>; VARIABLE_COUNT]) -> Self {
        Self { timestamp, values }
    }

    /// Record with every variable observed.
    pub fn complete(timestamp: NaiveDateTime, values: [f64; VARIABLE_COUNT]) -> Self {
        Self { timestamp, values: values.map(Some) }
    }

    #[inline]
    pub fn get(&self, var: Variable) -> Option<f64> {
        self.values[var.index()]
    }

    #[inline]
    pub fn set(&mut self, var: Variable, value: Option<f64>) {
        self.values[var.index()] = value;
    }
}

/// Chronologically ordered hourly records with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    records: Vec<ObservationRecord>,
}

impl ObservationSeries {
    /// Nominal spacing between consecutive records.
    pub const STEP: TimeDelta = TimeDelta::hours(1);

    /// Wraps records that are already in strictly increasing time order.
    pub fn from_records(records: Vec<ObservationRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(i) = records.windows(2).position(|w| w[0].timestamp >= w[1].timestamp) {
            return Err(Error::NotChronological(i + 1));
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ObservationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        self.records.iter().map(|r| r.timestamp).collect()
    }

    pub fn column(&self, var: Variable) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.get(var)).collect()
    }

    /// The column of `var` with every value present.
    pub fn complete_column(&self, var: Variable) -> Result<Vec<f64>> {
        self.records
            .iter()
            .enumerate()
            .map(|(index, r)| r.get(var).ok_or(Error::MissingValue { variable: var, index }))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.records.iter().all(|r| r.values.iter().all(Option::is_some))
    }

    /// Rows `range` of the series as a new series.
    pub fn slice(&self, range: core::ops::Range<usize>) -> Result<Self> {
        Self::from_records(self.records[range].to_vec())
    }

    /// Positions `i` where `timestamp[i] - timestamp[i-1]` differs from one hour,
    /// with the observed spacing.
    pub fn grid_gaps(&self) -> Vec<(usize, TimeDelta)> {
        self.records
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| {
                let step = w[1].timestamp - w[0].timestamp;
                (step != Self::STEP).then_some((i + 1, step))
            })
            .collect()
    }
}

/// Closed interval a variable must fall in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    #[serde(with = "extended_f64")]
    pub lower: f64,
    #[serde(with = "extended_f64")]
    pub upper: f64,
}

/// Finite values as numbers, infinities as `"inf"` / `"-inf"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(alloc::string::String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(other) => Err(serde::de::Error::custom(alloc::format!("bad bound {other:?}"))),
        }
    }
}

impl Bound {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

/// Physically plausible range per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalBounds {
    bounds: [Bound; VARIABLE_COUNT],
}

impl Default for PhysicalBounds {
    fn default() -> Self {
        let inf = f64::INFINITY;
        Self {
            bounds: [
                Bound::new(-30.0, 55.0),
                Bound::new(0.0, 100.0),
                Bound::new(0.0, inf),
                Bound::new(0.0, inf),
                Bound::new(850.0, 1100.0),
                Bound::new(0.0, 100.0),
                Bound::new(0.0, inf),
            ],
        }
    }
}

impl PhysicalBounds {
    pub fn get(&self, var: Variable) -> Bound {
        self.bounds[var.index()]
    }

    pub fn set(&mut self, var: Variable, lower: f64, upper: f64) -> Result<()> {
        if !(lower < upper) {
            return Err(Error::InvalidBounds(var));
        }
        self.bounds[var.index()] = Bound::new(lower, upper);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for var in Variable::ALL {
            let b = self.get(var);
            if !(b.lower < b.upper) {
                return Err(Error::InvalidBounds(var));
            }
        }
        Ok(())
    }
}

const TIMESTAMP_FORMATS: [&str; 4] =
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

/// Parses an ISO-8601 local datetime. A bare date is taken as midnight.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(|d| d.and_time(Default::default())))
}

fn parse_cell(row: usize, var: Variable, raw: Option<&String>) -> Result<Option<f64>> {
    let Some(raw) = raw.map(|s| s.trim()) else { return Ok(None) };
    if raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = raw.parse().map_err(|_| Error::MalformedNumber {
        row,
        column: var.name(),
        value: raw.to_string(),
    })?;
    Ok(v.is_finite().then_some(v))
}

/// Parses raw field maps into a time-sorted series.
///
/// Rows are sorted stably by timestamp and duplicate timestamps keep the first
/// row in input order. Empty cells become missing values. Spacing other than
/// one hour is logged but not filled in.
pub fn parse_and_sort(rows: &[BTreeMap<String, String>]) -> Result<ObservationSeries> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let extra: Vec<&str> = rows[0]
        .keys()
        .map(String::as_str)
        .filter(|k| *k != DATETIME_COLUMN && Variable::from_name(k).is_none())
        .collect();
    if !extra.is_empty() {
        log::warn!("ignoring columns {}", extra.join(", "));
    }
    let mut records = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let raw_ts = row.get(DATETIME_COLUMN).map(String::as_str).unwrap_or("");
        let timestamp = parse_timestamp(raw_ts)
            .ok_or_else(|| Error::MalformedTimestamp { row: i, value: raw_ts.to_string() })?;
        let mut values = [None; VARIABLE_COUNT];
        for var in Variable::ALL {
            values[var.index()] = parse_cell(i, var, row.get(var.name()))?;
        }
        records.push(ObservationRecord { timestamp, values });
    }
    records.sort_by_key(|r| r.timestamp);
    let before = records.len();
    records.dedup_by(|later, earlier| later.timestamp == earlier.timestamp);
    if records.len() < before {
        log::warn!("dropped {} rows with duplicate timestamps", before - records.len());
    }
    let series = ObservationSeries { records };
    let gaps = series.grid_gaps();
    if let Some((i, step)) = gaps.first() {
        log::warn!(
            "{} irregular steps in the hourly grid (first at row {i}: {} minutes)",
            gaps.len(),
            step.num_minutes()
        );
    }
    Ok(series)
}

/// Forward fill, then backward fill for leading gaps.
pub fn fill_missing(series: &ObservationSeries) -> Result<ObservationSeries> {
    let mut records = series.records.clone();
    for var in Variable::ALL {
        let k = var.index();
        let first = records
            .iter()
            .find_map(|r| r.values[k])
            .ok_or(Error::AllMissingColumn(var))?;
        let mut last = first;
        for r in records.iter_mut() {
            match r.values[k] {
                Some(v) => last = v,
                None => r.values[k] = Some(last),
            }
        }
    }
    Ok(ObservationSeries { records })
}

/// Marks every out-of-bounds cell missing and re-fills. Returns the repaired
/// series and the number of flagged cells.
pub fn remove_outliers(
    series: &ObservationSeries,
    bounds: &PhysicalBounds,
) -> Result<(ObservationSeries, usize)> {
    bounds.validate()?;
    let mut flagged = 0;
    let mut records = series.records.clone();
    for r in records.iter_mut() {
        for var in Variable::ALL {
            if let Some(v) = r.get(var) {
                if !bounds.get(var).contains(v) {
                    r.set(var, None);
                    flagged += 1;
                }
            }
        }
    }
    let repaired = fill_missing(&ObservationSeries { records })?;
    Ok((repaired, flagged))
}

/// Parse, fill and screen in one pass.
pub fn preprocess(
    rows: &[BTreeMap<String, String>],
    bounds: &PhysicalBounds,
) -> Result<(ObservationSeries, usize)> {
    let series = parse_and_sort(rows)?;
    remove_outliers(&fill_missing(&series)?, bounds)
}

/// Number of leading rows that go to the training part.
pub fn split_point(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    // the small offset absorbs representation error such as 0.29 * 100 = 28.999...
    let k = math::floor(ratio * n as f64 + 1e-9) as usize;
    if k == 0 || k >= n {
        return Err(Error::TooFewSamples(alloc::format!(
            "split of {n} rows at ratio {ratio} leaves an empty part"
        )));
    }
    Ok(k)
}

/// First `floor(ratio * n)` items for training, the rest for testing.
pub fn chronological_split<T: Clone>(items: &[T], ratio: f64) -> Result<(Vec<T>, Vec<T>)> {
    let k = split_point(items.len(), ratio)?;
    Ok((items[..k].to_vec(), items[k..].to_vec()))
}

impl ObservationSeries {
    pub fn split(&self, ratio: f64) -> Result<(ObservationSeries, ObservationSeries)> {
        let (a, b) = chronological_split(&self.records, ratio)?;
        Ok((ObservationSeries { records: a }, ObservationSeries { records: b }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn ts(h: i64) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2024, 9, 9).unwrap().and_hms_opt(0, 0, 0).unwrap() + TimeDelta::hours(h)
    }

    fn row(h: i64, temp: &str) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("datetime".into(), ts(h).format("%Y-%m-%dT%H:%M:%S").to_string());
        m.insert("temp".into(), temp.into());
        for v in &Variable::ALL[1..] {
            m.insert(v.name().into(), "50".into());
        }
        m
    }

    fn temp_series(values: &[Option<f64>]) -> ObservationSeries {
        let records = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut vals = [Some(50.0); VARIABLE_COUNT];
                vals[Variable::Sealevelpressure.index()] = Some(1000.0);
                vals[0] = *v;
                ObservationRecord::new(ts(i as i64), vals)
            })
            .collect();
        ObservationSeries::from_records(records).unwrap()
    }

    #[test]
    fn sorts_rows_by_time() {
        let s = parse_and_sort(&[row(2, "2"), row(1, "1"), row(3, "3")]).unwrap();
        assert_eq!(s.timestamps(), vec![ts(1), ts(2), ts(3)]);
        assert_eq!(s.column(Variable::Temp), vec![Some(1.0), Some(2.0), Some(3.0)]);
    }

    #[test]
    fn empty_rows_rejected() {
        assert_eq!(parse_and_sort(&[]), Err(Error::EmptyDataset));
    }

    #[test]
    fn duplicate_timestamp_keeps_first() {
        let s = parse_and_sort(&[row(1, "1"), row(2, "2"), row(1, "9")]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.records()[0].get(Variable::Temp), Some(1.0));
    }

    #[test]
    fn malformed_timestamp_reports_row() {
        let mut bad = row(0, "1");
        bad.insert("datetime".into(), "yesterday".into());
        let err = parse_and_sort(&[row(1, "1"), bad]).unwrap_err();
        assert!(matches!(err, Error::MalformedTimestamp { row: 1, .. }));
    }

    #[test]
    fn empty_cell_is_missing() {
        let s = parse_and_sort(&[row(0, ""), row(1, " 2.5 ")]).unwrap();
        assert_eq!(s.column(Variable::Temp), vec![None, Some(2.5)]);
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(parse_timestamp("2024-09-09T05:00:00"), Some(ts(5)));
        assert_eq!(parse_timestamp("2024-09-09 05:00"), Some(ts(5)));
        assert_eq!(parse_timestamp("2024-09-09"), Some(ts(0)));
        assert_eq!(parse_timestamp("09/09/2024"), None);
    }

    #[test]
    fn forward_fill() {
        let s = fill_missing(&temp_series(&[Some(1.0), None, Some(3.0)])).unwrap();
        assert_eq!(s.column(Variable::Temp), vec![Some(1.0), Some(1.0), Some(3.0)]);
    }

    #[test]
    fn backward_fill_leading_gap() {
        let s = fill_missing(&temp_series(&[None, Some(2.0)])).unwrap();
        assert_eq!(s.column(Variable::Temp), vec![Some(2.0), Some(2.0)]);
    }

    #[test]
    fn all_missing_column() {
        assert_eq!(
            fill_missing(&temp_series(&[None, None])),
            Err(Error::AllMissingColumn(Variable::Temp))
        );
    }

    #[test]
    fn negative_humidity_is_refilled() {
        let mut s = temp_series(&[Some(1.0), Some(2.0), Some(3.0)]);
        s.records[1].set(Variable::Humidity, Some(-5.0));
        let (out, flagged) = remove_outliers(&s, &PhysicalBounds::default()).unwrap();
        assert_eq!(flagged, 1);
        assert_eq!(out.records()[1].get(Variable::Humidity), Some(50.0));
    }

    #[test]
    fn in_bounds_series_unchanged() {
        let s = temp_series(&[Some(1.0), Some(2.0), Some(3.0)]);
        let (out, flagged) = remove_outliers(&s, &PhysicalBounds::default()).unwrap();
        assert_eq!(flagged, 0);
        assert_eq!(out, s);
    }

    #[test]
    fn absurd_temperature_flagged() {
        let s = temp_series(&[Some(1.0), Some(999.0)]);
        let (out, flagged) = remove_outliers(&s, &PhysicalBounds::default()).unwrap();
        assert_eq!(flagged, 1);
        assert_eq!(out.column(Variable::Temp), vec![Some(1.0), Some(1.0)]);
    }

    #[test]
    fn every_value_out_of_bounds() {
        let s = temp_series(&[Some(100.0), Some(999.0)]);
        assert_eq!(
            remove_outliers(&s, &PhysicalBounds::default()),
            Err(Error::AllMissingColumn(Variable::Temp))
        );
    }

    #[test]
    fn bounds_must_be_ordered() {
        let mut b = PhysicalBounds::default();
        assert_eq!(b.set(Variable::Temp, 5.0, 5.0), Err(Error::InvalidBounds(Variable::Temp)));
    }

    #[test]
    fn split_counts() {
        let items: Vec<usize> = (0..100).collect();
        let (a, b) = chronological_split(&items, 0.8).unwrap();
        assert_eq!((a.len(), b.len()), (80, 20));
        let items: Vec<usize> = (0..10).collect();
        let (a, b) = chronological_split(&items, 0.8).unwrap();
        assert_eq!(a, (0..8).collect::<Vec<_>>());
        assert_eq!(b, vec![8, 9]);
    }

    #[test]
    fn split_rejects_bad_ratio() {
        let items = [1, 2, 3];
        assert_eq!(chronological_split(&items, 1.0), Err(Error::InvalidRatio(1.0)));
        assert_eq!(chronological_split(&items, 0.0), Err(Error::InvalidRatio(0.0)));
        assert!(matches!(chronological_split(&items, 0.1), Err(Error::TooFewSamples(_))));
    }

    #[test]
    fn gaps_are_detected() {
        let s = parse_and_sort(&[row(0, "1"), row(1, "1"), row(3, "1")]).unwrap();
        assert_eq!(s.grid_gaps(), vec![(2, TimeDelta::hours(2))]);
    }

    fn arb_column() -> impl Strategy<Value = Vec<Option<f64>>> {
        proptest::collection::vec(proptest::option::of(-40.0f64..70.0), 1..40)
            .prop_filter("one observed value", |v| v.iter().any(Option::is_some))
    }

    proptest! {
        #[test]
        fn fill_is_idempotent(col in arb_column()) {
            let once = fill_missing(&temp_series(&col)).unwrap();
            let twice = fill_missing(&once).unwrap();
            prop_assert!(once.is_complete());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn outlier_screen_keeps_valid_cells(col in arb_column()) {
            let s = fill_missing(&temp_series(&col)).unwrap();
            let bounds = PhysicalBounds::default();
            if let Ok((out, _)) = remove_outliers(&s, &bounds) {
                for (a, b) in s.records().iter().zip(out.records()) {
                    prop_assert_eq!(a.timestamp, b.timestamp);
                    let v = a.get(Variable::Temp).unwrap();
                    if bounds.get(Variable::Temp).contains(v) {
                        prop_assert_eq!(v.to_bits(), b.get(Variable::Temp).unwrap().to_bits());
                    }
                }
            }
        }

        #[test]
        fn split_is_complementary(n in 2usize..500, ratio in 0.05f64..0.95) {
            let items: Vec<usize> = (0..n).collect();
            if let Ok((a, b)) = chronological_split(&items, ratio) {
                prop_assert!(a.last().unwrap() < b.first().unwrap());
                let mut joined = a.clone();
                joined.extend(b);
                prop_assert_eq!(joined, items);
            }
        }
    }
}
