//! Behavior file format.
//!
//! A behavior file is a JSON object:
//!
//! ```json
//! {
//!   "settings_a": 2, "settings_b": 2, "outcomes_a": 2, "outcomes_b": 2,
//!   "friend_on_a": false, "friend_on_b": false,
//!   "table": { "1,1": [["1/2", "0/1"], ["0/1", "1/2"]], ... }
//! }
//! ```
//!
//! Keys of `table` are 1-indexed `"x,y"`; each value is a row-major
//! `outcomes_a x outcomes_b` matrix. Entries are `"p/q"` or decimal strings;
//! writers always emit `"p/q"` in lowest terms. Unknown fields are rejected,
//! except for the optional `protocol` object that quantum runs attach.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError, Scenario};
use crate::rational::{format_rational, parse_rational, RationalError, RationalizeOptions};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("table key {0:?} is not of the form \"x,y\"")]
    BadKey(String),
    #[error("entry table[{key:?}][{row}][{col}]: {source}")]
    Rationalize {
        key: String,
        row: usize,
        col: usize,
        #[source]
        source: RationalError,
    },
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// On-disk container shared by behaviors and quantum protocol runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorFile {
    pub settings_a: usize,
    pub settings_b: usize,
    pub outcomes_a: usize,
    pub outcomes_b: usize,
    pub friend_on_a: bool,
    pub friend_on_b: bool,
    pub table: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<serde_json::Value>,
}

impl BehaviorFile {
    pub fn from_behavior(beh: &Behavior) -> Self {
        let s = beh.scenario();
        let table = s
            .cells()
            .map(|(x, y)| {
                let m = beh
                    .matrix(x, y)
                    .iter()
                    .map(|row| row.iter().map(format_rational).collect())
                    .collect();
                (format!("{x},{y}"), m)
            })
            .collect();
        Self {
            settings_a: s.settings_a,
            settings_b: s.settings_b,
            outcomes_a: s.outcomes_a,
            outcomes_b: s.outcomes_b,
            friend_on_a: s.friend_on_a,
            friend_on_b: s.friend_on_b,
            table,
            protocol: None,
        }
    }

    pub fn to_behavior(&self, opts: &RationalizeOptions) -> Result<Behavior, FormatError> {
        let scenario = Scenario {
            settings_a: self.settings_a,
            settings_b: self.settings_b,
            outcomes_a: self.outcomes_a,
            outcomes_b: self.outcomes_b,
            friend_on_a: self.friend_on_a,
            friend_on_b: self.friend_on_b,
        };
        scenario.check()?;
        let mut table = BTreeMap::new();
        for (key, rows) in &self.table {
            let (x, y) = parse_key(key)?;
            let mut m = Vec::with_capacity(rows.len());
            for (r, row) in rows.iter().enumerate() {
                let mut out = Vec::with_capacity(row.len());
                for (c, text) in row.iter().enumerate() {
                    out.push(parse_rational(text, opts).map_err(|source| FormatError::Rationalize {
                        key: key.clone(),
                        row: r,
                        col: c,
                        source,
                    })?);
                }
                m.push(out);
            }
            table.insert((x, y), m);
        }
        Ok(Behavior::from_table(scenario, &table)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("behavior file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        serde_json::from_str(text).map_err(|e| FormatError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

fn parse_key(key: &str) -> Result<(usize, usize), FormatError> {
    let bad = || FormatError::BadKey(key.to_string());
    let (x, y) = key.split_once(',').ok_or_else(bad)?;
    Ok((
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn behavior_to_string(beh: &Behavior) -> String {
    BehaviorFile::from_behavior(beh).to_json()
}

pub fn behavior_from_str(text: &str, opts: &RationalizeOptions) -> Result<Behavior, FormatError> {
    BehaviorFile::from_json(text)?.to_behavior(opts)
}

pub fn read_behavior(path: impl AsRef<Path>, opts: &RationalizeOptions) -> Result<Behavior, FormatError> {
    read_behavior_file(path)?.to_behavior(opts)
}

pub fn read_behavior_file(path: impl AsRef<Path>) -> Result<BehaviorFile, FormatError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    BehaviorFile::from_json(&text)
}

pub fn write_behavior(beh: &Behavior, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_text(path, &behavior_to_string(beh))
}

pub(crate) fn write_text(path: impl AsRef<Path>, text: &str) -> Result<(), FormatError> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::pr_box;
    use crate::rational::ratio;

    #[test]
    fn pr_box_round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pr.behavior");
        write_behavior(&pr_box(), &path).unwrap();
        let back = read_behavior(&path, &RationalizeOptions::default()).unwrap();
        assert_eq!(back, pr_box());
    }

    #[test]
    fn writer_emits_fractions() {
        let text = behavior_to_string(&pr_box());
        assert!(text.contains("\"1/2\""));
        assert!(text.contains("\"0/1\""));
        assert!(text.contains("\"2,2\""));
    }

    #[test]
    fn decimal_entries_parse_exactly() {
        let text = r#"{"settings_a":1,"settings_b":1,"outcomes_a":2,"outcomes_b":2,
            "friend_on_a":false,"friend_on_b":false,
            "table":{"1,1":[["0.125","0.375"],["1/3","1/6"]]}}"#;
        let b = behavior_from_str(text, &RationalizeOptions::default()).unwrap();
        assert_eq!(b.p(1, 1, 0, 0), &ratio(1, 8));
        assert_eq!(b.p(1, 1, 1, 0), &ratio(1, 3));
    }

    #[test]
    fn unknown_fields_rejected_with_position() {
        let text = "{\"settings_a\":1,\n\"bogus\":3}";
        match BehaviorFile::from_json(text) {
            Err(FormatError::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_entry_names_its_location() {
        let text = r#"{"settings_a":1,"settings_b":1,"outcomes_a":2,"outcomes_b":2,
            "friend_on_a":false,"friend_on_b":false,
            "table":{"1,1":[["0.5","x"],["0","0.5"]]}}"#;
        match behavior_from_str(text, &RationalizeOptions::default()) {
            Err(FormatError::Rationalize { key, row, col, .. }) => {
                assert_eq!((key.as_str(), row, col), ("1,1", 0, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_cell_is_reported() {
        let text = r#"{"settings_a":1,"settings_b":2,"outcomes_a":2,"outcomes_b":2,
            "friend_on_a":false,"friend_on_b":false,
            "table":{"1,1":[["1/4","1/4"],["1/4","1/4"]]}}"#;
        assert!(matches!(
            behavior_from_str(text, &RationalizeOptions::default()),
            Err(FormatError::Behavior(BehaviorError::MissingCell { x: 1, y: 2 }))
        ));
    }
}
