//! Human-rating storage and aggregation.
//!
//! Raters score each generated summary for control accuracy (is everything
//! it claims about the packets true) and control informativeness (how much
//! useful packet information it conveys), 1 to 5. This module parses the
//! ratings CSV and reduces it to per-method means; every record weighs the
//! same.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The pipeline variant a rating applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "m1")]
    M1,
    #[serde(rename = "m2")]
    M2,
    #[serde(rename = "m3")]
    M3,
    #[serde(rename = "m4")]
    M4,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::M1 => "m1",
            Method::M2 => "m2",
            Method::M3 => "m3",
            Method::M4 => "m4",
        }
    }

    fn parse(text: &str) -> Option<Method> {
        match text {
            "m1" => Some(Method::M1),
            "m2" => Some(Method::M2),
            "m3" => Some(Method::M3),
            "m4" => Some(Method::M4),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One rater's scores for one summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub packet_file_id: String,
    pub method: Method,
    pub rater_id: String,
    /// Control accuracy, 1..=5.
    pub ca: u8,
    /// Control informativeness, 1..=5.
    pub ci: u8,
}

/// Per-method means over all records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodScore {
    pub method: Method,
    pub mean_ca: f64,
    pub mean_ci: f64,
    pub n: usize,
}

/// Errors raised while loading or aggregating ratings.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read ratings {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("ratings header must be {expected:?}, got {got:?}")]
    BadHeader { expected: String, got: String },
    #[error("ratings row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("ratings row {row}: {field} = {value} outside 1..=5")]
    OutOfRange {
        row: usize,
        field: &'static str,
        value: i64,
    },
    #[error("ratings row {row}: method {value:?} is not one of m1..m4")]
    BadMethod { row: usize, value: String },
    #[error("ratings row {row}: duplicate key ({key})")]
    DuplicateRating { row: usize, key: String },
    #[error("no rating records to aggregate")]
    NoData,
}

const EXPECTED_HEADER: [&str; 5] = ["packet_file_id", "method", "rater_id", "ca", "ci"];

/// Load and validate a ratings CSV file.
pub fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_ratings_from_str(&text)
}

/// Load and validate ratings from CSV text.
pub fn load_ratings_from_str(text: &str) -> Result<Vec<RatingRecord>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| EvalError::BadRow {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != EXPECTED_HEADER {
        return Err(EvalError::BadHeader {
            expected: EXPECTED_HEADER.join(","),
            got: got.join(","),
        });
    }

    let mut records = Vec::new();
    let mut seen: HashSet<(String, Method, String)> = HashSet::new();
    for (offset, row) in reader.records().enumerate() {
        // Row numbers are 1-based counting the header line.
        let row_number = offset + 2;
        let row = row.map_err(|e| EvalError::BadRow {
            row: row_number,
            message: e.to_string(),
        })?;
        if row.len() != 5 {
            return Err(EvalError::BadRow {
                row: row_number,
                message: format!("expected 5 fields, got {}", row.len()),
            });
        }
        let method = Method::parse(&row[1]).ok_or_else(|| EvalError::BadMethod {
            row: row_number,
            value: row[1].to_string(),
        })?;
        let score = |field: &'static str, raw: &str| -> Result<u8, EvalError> {
            let value: i64 = raw.parse().map_err(|_| EvalError::BadRow {
                row: row_number,
                message: format!("{field} {raw:?} is not an integer"),
            })?;
            if !(1..=5).contains(&value) {
                return Err(EvalError::OutOfRange {
                    row: row_number,
                    field,
                    value,
                });
            }
            Ok(value as u8)
        };
        let record = RatingRecord {
            packet_file_id: row[0].to_string(),
            method,
            rater_id: row[2].to_string(),
            ca: score("ca", &row[3])?,
            ci: score("ci", &row[4])?,
        };
        let key = (
            record.packet_file_id.clone(),
            record.method,
            record.rater_id.clone(),
        );
        if !seen.insert(key.clone()) {
            return Err(EvalError::DuplicateRating {
                row: row_number,
                key: format!("{}, {}, {}", key.0, key.1, key.2),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Arithmetic mean of CA and CI per method, every record equally weighted.
/// Full precision is kept here; rendering rounds to two decimals.
pub fn aggregate(records: &[RatingRecord]) -> Result<Vec<MethodScore>, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoData);
    }
    let mut sums: BTreeMap<Method, (u64, u64, usize)> = BTreeMap::new();
    for record in records {
        let entry = sums.entry(record.method).or_insert((0, 0, 0));
        entry.0 += u64::from(record.ca);
        entry.1 += u64::from(record.ci);
        entry.2 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(method, (ca_sum, ci_sum, n))| MethodScore {
            method,
            mean_ca: ca_sum as f64 / n as f64,
            mean_ci: ci_sum as f64 / n as f64,
            n,
        })
        .collect())
}

/// Aligned plain-text table, methods sorted m1..m4, means to two decimals.
pub fn render_table(scores: &[MethodScore]) -> String {
    let mut sorted: Vec<&MethodScore> = scores.iter().collect();
    sorted.sort_by_key(|s| s.method);
    let mut out = String::from("Method  CI    CA    N\n");
    for score in sorted {
        out.push_str(&format!(
            "{:<7} {:<5.2} {:<5.2} {}\n",
            score.method.label(),
            score.mean_ci,
            score.mean_ca,
            score.n
        ));
    }
    out
}

/// The same report as JSON.
pub fn scores_to_json(scores: &[MethodScore]) -> String {
    let mut sorted: Vec<&MethodScore> = scores.iter().collect();
    sorted.sort_by_key(|s| s.method);
    serde_json::to_string_pretty(&sorted).expect("scores serialize")
}
