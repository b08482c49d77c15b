//! Accuracy-vs-pose curves and breakdown-point detection.
//!
//! A curve samples top-1 accuracy every 5 degrees from -90 to +90. Scanning
//! outward from 0 in each direction, the breakdown point is the first angle
//! where accuracy falls strictly below the floor, or falls by strictly more
//! than the drop threshold (absolute, in accuracy units) from its inner
//! neighbor. A side with no trigger reports +/-90.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{parse_grid_angle, PredictionRecord, Tally, ANGLE_TAG};

pub const STEP_DEG: i32 = 5;
pub const MAX_ANGLE: i32 = 90;
pub const GRID_LEN: usize = (2 * MAX_ANGLE / STEP_DEG + 1) as usize;

/// Slack for comparisons against the floor and drop thresholds, so that
/// accuracies exactly on a threshold don't trigger through rounding noise
/// (1.0 - 0.85 is 0.15000000000000002 in binary floating point).
pub const COMPARE_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum BreakdownError {
    #[error("curve needs exactly {GRID_LEN} samples on the 5 degree grid, got {0}")]
    Length(usize),
    #[error("missing grid angles: {0:?}")]
    MissingAngles(Vec<i32>),
    #[error("angle {0} is off the 5 degree grid [-90, 90]")]
    OffGrid(String),
    #[error("duplicate angle {0}")]
    DuplicateAngle(i32),
    #[error("accuracy {accuracy} at {angle} deg outside [0, 1]")]
    Accuracy { angle: i32, accuracy: f64 },
    #[error("records without angle_deg: {0:?}")]
    MissingAngleTag(Vec<String>),
    #[error("{name} must lie strictly between 0 and 1, got {value}")]
    Config { name: &'static str, value: f64 },
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
}

/// Index of `angle` in the grid.
fn grid_index(angle: i32) -> usize {
    ((angle + MAX_ANGLE) / STEP_DEG) as usize
}

pub fn grid_angles() -> impl Iterator<Item = i32> {
    (-MAX_ANGLE..=MAX_ANGLE).step_by(STEP_DEG as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCurve {
    accuracies: [f64; GRID_LEN],
}

impl AccuracyCurve {
    /// Accuracies ordered from -90 to +90.
    pub fn new(accuracies: &[f64]) -> Result<Self, BreakdownError> {
        let accuracies: [f64; GRID_LEN] = accuracies
            .try_into()
            .map_err(|_| BreakdownError::Length(accuracies.len()))?;
        for (angle, &accuracy) in grid_angles().zip(&accuracies) {
            if !(0.0..=1.0).contains(&accuracy) {
                return Err(BreakdownError::Accuracy { angle, accuracy });
            }
        }
        Ok(Self { accuracies })
    }

    pub fn from_fn(f: impl Fn(i32) -> f64) -> Result<Self, BreakdownError> {
        Self::new(&grid_angles().map(f).collect::<Vec<_>>())
    }

    pub fn from_points(points: &[(i32, f64)]) -> Result<Self, BreakdownError> {
        let mut slots: [Option<f64>; GRID_LEN] = [None; GRID_LEN];
        for &(angle, acc) in points {
            if angle % STEP_DEG != 0 || !(-MAX_ANGLE..=MAX_ANGLE).contains(&angle) {
                return Err(BreakdownError::OffGrid(angle.to_string()));
            }
            let slot = &mut slots[grid_index(angle)];
            if slot.replace(acc).is_some() {
                return Err(BreakdownError::DuplicateAngle(angle));
            }
        }
        let missing: Vec<i32> = grid_angles().filter(|&a| slots[grid_index(a)].is_none()).collect();
        if !missing.is_empty() {
            return Err(BreakdownError::MissingAngles(missing));
        }
        Self::new(&slots.map(|s| s.expect("all present")))
    }

    pub fn at(&self, angle: i32) -> f64 {
        self.accuracies[grid_index(angle)]
    }

    pub fn accuracies(&self) -> &[f64; GRID_LEN] {
        &self.accuracies
    }

    pub fn points(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        grid_angles().zip(self.accuracies.iter().copied())
    }

    /// `a'(theta) = a(-theta)`.
    pub fn mirrored(&self) -> Self {
        let mut accuracies = self.accuracies;
        accuracies.reverse();
        Self { accuracies }
    }

    /// `angle_deg,accuracy` rows, -90 first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle_deg,accuracy\n");
        for (angle, acc) in self.points() {
            let _ = writeln!(out, "{angle},{acc}");
        }
        out
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, BreakdownError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| BreakdownError::Csv { row: 1, message: e.to_string() })?;
        if headers.iter().collect::<Vec<_>>() != ["angle_deg", "accuracy"] {
            return Err(BreakdownError::Csv {
                row: 1,
                message: "header must be angle_deg,accuracy".into(),
            });
        }
        let mut points = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row_no = i + 2;
            let row = row.map_err(|e| BreakdownError::Csv { row: row_no, message: e.to_string() })?;
            let angle = parse_grid_angle(&row[0]).map_err(|message| BreakdownError::Csv { row: row_no, message })?;
            let acc: f64 = row[1].parse().map_err(|_| BreakdownError::Csv {
                row: row_no,
                message: format!("accuracy {:?} is not a number", &row[1]),
            })?;
            points.push((angle, acc));
        }
        Self::from_points(&points)
    }
}

/// Per-angle top-1 accuracy from records tagged with `angle_deg`.
pub fn curve_from_predictions(records: &[PredictionRecord]) -> Result<AccuracyCurve, BreakdownError> {
    let untagged: Vec<String> = records
        .iter()
        .filter(|r| !r.condition.contains_key(ANGLE_TAG))
        .map(|r| r.item_id.clone())
        .collect();
    if !untagged.is_empty() {
        return Err(BreakdownError::MissingAngleTag(untagged));
    }
    let mut tallies: BTreeMap<i32, Tally> = BTreeMap::new();
    for r in records {
        let raw = &r.condition[ANGLE_TAG];
        let angle = parse_grid_angle(raw).map_err(|_| BreakdownError::OffGrid(raw.clone()))?;
        tallies.entry(angle).or_default().record(r.is_correct());
    }
    let points: Vec<(i32, f64)> = tallies
        .into_iter()
        .map(|(a, t)| (a, t.accuracy().expect("tallied at least one record")))
        .collect();
    AccuracyCurve::from_points(&points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakdownConfig {
    pub accuracy_floor: f64,
    pub drop_threshold: f64,
}

impl Default for BreakdownConfig {
    fn default() -> Self {
        Self {
            accuracy_floor: 0.60,
            drop_threshold: 0.15,
        }
    }
}

impl BreakdownConfig {
    pub fn new(accuracy_floor: f64, drop_threshold: f64) -> Result<Self, BreakdownError> {
        for (name, value) in [("accuracy_floor", accuracy_floor), ("drop_threshold", drop_threshold)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(BreakdownError::Config { name, value });
            }
        }
        Ok(Self {
            accuracy_floor,
            drop_threshold,
        })
    }

    fn below_floor(&self, acc: f64) -> bool {
        acc < self.accuracy_floor - COMPARE_EPS
    }

    fn sharp_drop(&self, inner: f64, outer: f64) -> bool {
        inner - outer > self.drop_threshold + COMPARE_EPS
    }
}

/// JSON: `{"negative", "negative_triggered", "positive", "positive_triggered"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakdownResult {
    pub positive: i32,
    pub negative: i32,
    pub positive_triggered: bool,
    pub negative_triggered: bool,
}

impl BreakdownResult {
    pub const NONE: BreakdownResult = BreakdownResult {
        positive: MAX_ANGLE,
        negative: -MAX_ANGLE,
        positive_triggered: false,
        negative_triggered: false,
    };
}

fn scan_side(curve: &AccuracyCurve, cfg: &BreakdownConfig, sign: i32) -> Option<i32> {
    (1..=MAX_ANGLE / STEP_DEG).map(|k| sign * k * STEP_DEG).find(|&theta| {
        let inner = curve.at(theta - sign * STEP_DEG);
        let outer = curve.at(theta);
        cfg.below_floor(outer) || cfg.sharp_drop(inner, outer)
    })
}

pub fn detect_breakdown(curve: &AccuracyCurve, cfg: &BreakdownConfig) -> BreakdownResult {
    if cfg.below_floor(curve.at(0)) {
        return BreakdownResult {
            positive: 0,
            negative: 0,
            positive_triggered: true,
            negative_triggered: true,
        };
    }
    let pos = scan_side(curve, cfg, 1);
    let neg = scan_side(curve, cfg, -1);
    BreakdownResult {
        positive: pos.unwrap_or(MAX_ANGLE),
        negative: neg.unwrap_or(-MAX_ANGLE),
        positive_triggered: pos.is_some(),
        negative_triggered: neg.is_some(),
    }
}

/// Unweighted mean of the positive and negative breakdown angles, or
/// `None` for an empty list.
pub fn average_breakdowns(results: &[BreakdownResult]) -> Option<(f64, f64)> {
    if results.is_empty() {
        return None;
    }
    let n = results.len() as f64;
    let pos: i64 = results.iter().map(|r| r.positive as i64).sum();
    let neg: i64 = results.iter().map(|r| r.negative as i64).sum();
    Some((pos as f64 / n, neg as f64 / n))
}

/// Two decimals plus a degree sign: `63.41°`.
pub fn format_degrees(value: f64) -> String {
    format!("{:.2}\u{b0}", (value * 100.0).round() / 100.0)
}
