//! Top-1 accuracy over prediction records and the percent-improvement
//! arithmetic used to compare an augmented model against its baseline.
//!
//! Counts are accumulated as integers; conversion to a real happens only
//! when an accuracy is reported.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("accuracy is undefined for an empty record set")]
    Empty,
    #[error("records missing key {key:?}: {item_ids:?}")]
    MissingKey { key: String, item_ids: Vec<String> },
    #[error("baseline accuracy must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error("csv: {0}")]
    Csv(String),
}

pub const ANGLE_TAG: &str = "angle_deg";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub item_id: String,
    pub true_label: String,
    pub predicted_label: String,
    /// Free-form tags such as `angle_deg` or `shadow_attr`.
    #[serde(default)]
    pub condition: BTreeMap<String, String>,
}

impl PredictionRecord {
    pub fn new(item_id: impl Into<String>, true_label: impl Into<String>, predicted_label: impl Into<String>) -> Self {
        Self {
            item_id: item_id.into(),
            true_label: true_label.into(),
            predicted_label: predicted_label.into(),
            condition: BTreeMap::new(),
        }
    }

    pub fn with_tag(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.condition.insert(key.into(), value.into());
        self
    }

    /// Labels compare byte-for-byte.
    pub fn is_correct(&self) -> bool {
        self.predicted_label == self.true_label
    }

    /// Value used for grouping; `"class"` maps to the true label.
    pub fn group_value(&self, key: &str) -> Option<&str> {
        if key == "class" {
            Some(&self.true_label)
        } else {
            self.condition.get(key).map(String::as_str)
        }
    }
}

/// Correct/total counter. Merging is associative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub correct: u64,
    pub total: u64,
}

impl Tally {
    pub fn record(&mut self, correct: bool) {
        self.total += 1;
        self.correct += correct as u64;
    }

    pub fn merge(self, other: Tally) -> Tally {
        Tally {
            correct: self.correct + other.correct,
            total: self.total + other.total,
        }
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

impl<'a> FromIterator<&'a PredictionRecord> for Tally {
    fn from_iter<I: IntoIterator<Item = &'a PredictionRecord>>(iter: I) -> Self {
        let mut t = Tally::default();
        for r in iter {
            t.record(r.is_correct());
        }
        t
    }
}

pub fn top1_accuracy(records: &[PredictionRecord]) -> Result<f64, MetricsError> {
    records.iter().collect::<Tally>().accuracy().ok_or(MetricsError::Empty)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub count: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub overall: f64,
    pub by_group: BTreeMap<String, GroupAccuracy>,
}

pub fn grouped_accuracy(records: &[PredictionRecord], key: &str) -> Result<AccuracyReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let missing: Vec<String> = records
        .iter()
        .filter(|r| r.group_value(key).is_none())
        .map(|r| r.item_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(MetricsError::MissingKey {
            key: key.to_string(),
            item_ids: missing,
        });
    }

    let mut groups: BTreeMap<String, Tally> = BTreeMap::new();
    for r in records {
        let value = r.group_value(key).expect("checked above");
        groups.entry(value.to_string()).or_default().record(r.is_correct());
    }
    let overall = groups.values().fold(Tally::default(), |a, &b| a.merge(b));
    Ok(AccuracyReport {
        overall: overall.accuracy().expect("non-empty"),
        by_group: groups
            .into_iter()
            .map(|(k, t)| {
                (
                    k,
                    GroupAccuracy {
                        count: t.total,
                        accuracy: t.accuracy().expect("groups are non-empty"),
                    },
                )
            })
            .collect(),
    })
}

/// Signed relative change in percent.
///
/// Displays with one decimal, or two when the magnitude is below 1%
/// (`+8.2%`, `+0.31%`). Exactly zero renders as `+0.0%`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PercentChange(pub f64);

impl PercentChange {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn decimals(self) -> usize {
        if self.0 != 0.0 && self.0.abs() < 1.0 {
            2
        } else {
            1
        }
    }

    /// Half-away-from-zero rounding at the display precision.
    pub fn rounded(self) -> f64 {
        let scale = 10f64.powi(self.decimals() as i32);
        (self.0 * scale).round() / scale
    }
}

impl fmt::Display for PercentChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.rounded();
        let sign = if r < 0.0 { "-" } else { "+" };
        write!(f, "{sign}{:.*}%", self.decimals(), r.abs())
    }
}

pub fn percent_change(baseline: f64, variant: f64) -> Result<PercentChange, MetricsError> {
    if baseline.is_nan() || baseline <= 0.0 {
        return Err(MetricsError::NonPositiveBaseline(baseline));
    }
    Ok(PercentChange(100.0 * (variant - baseline) / baseline))
}

/// Read a predictions CSV: `item_id,true_label,predicted_label` followed by
/// any number of condition columns. Empty condition cells are omitted from
/// the record. Rows are numbered from 1 at the header.
pub fn read_predictions_csv<R: Read>(reader: R) -> Result<Vec<PredictionRecord>, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| MetricsError::Csv(e.to_string()))?.clone();
    let required = ["item_id", "true_label", "predicted_label"];
    for (i, name) in required.iter().enumerate() {
        if headers.get(i) != Some(name) {
            return Err(MetricsError::Schema {
                row: 1,
                message: format!("expected column {} to be {name:?}", i + 1),
            });
        }
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| MetricsError::Schema {
            row: line,
            message: e.to_string(),
        })?;
        let mut record = PredictionRecord::new(&row[0], &row[1], &row[2]);
        if record.item_id.is_empty() {
            return Err(MetricsError::Schema {
                row: line,
                message: "empty item_id".into(),
            });
        }
        for (name, value) in headers.iter().zip(row.iter()).skip(3) {
            if !value.is_empty() {
                record.condition.insert(name.to_string(), value.to_string());
            }
        }
        if let Some(angle) = record.condition.get(ANGLE_TAG) {
            if let Err(message) = parse_grid_angle(angle) {
                return Err(MetricsError::Schema { row: line, message });
            }
        }
        if !seen.insert(record.item_id.clone()) {
            return Err(MetricsError::Schema {
                row: line,
                message: format!("duplicate item_id {:?}", record.item_id),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Parse an `angle_deg` tag: an integer multiple of 5 in `[-90, 90]`.
pub fn parse_grid_angle(text: &str) -> Result<i32, String> {
    let angle: i32 = text
        .trim()
        .parse()
        .map_err(|_| format!("angle_deg {text:?} is not an integer"))?;
    if angle % 5 != 0 || !(-90..=90).contains(&angle) {
        return Err(format!("angle_deg {angle} is not a multiple of 5 in [-90, 90]"));
    }
    Ok(angle)
}
