//! Fractional-frequency time series and its CSV form
//! (`index,time_s,y_fractional`).

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

pub const CSV_HEADER: &str = "index,time_s,y_fractional";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("record is not uniformly spaced at line {line}")]
    NonUniform { line: usize },
    #[error("record needs at least two samples to infer its spacing")]
    TooShort,
    #[error("invalid record: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RecordMetadata {
    pub config_hash: u64,
    pub seed: u64,
    pub skipped_pairs: u64,
}

/// Uniformly spaced fractional-frequency samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyRecord {
    /// Sample spacing, s.
    pub tau0: f64,
    pub samples: Vec<f64>,
    pub metadata: RecordMetadata,
}

impl FrequencyRecord {
    pub fn new(tau0: f64, samples: Vec<f64>) -> Result<Self, RecordError> {
        let record = Self { tau0, samples, metadata: RecordMetadata::default() };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        if !(self.tau0.is_finite() && self.tau0 > 0.0) {
            return Err(RecordError::Invalid(format!("tau0 must be > 0, got {}", self.tau0)));
        }
        if let Some(i) = self.samples.iter().position(|y| !y.is_finite()) {
            return Err(RecordError::Invalid(format!("sample {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.samples.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (i, y) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{y:?}", i as f64 * self.tau0);
        }
        out
    }

    /// Parses the CSV form. The spacing is taken from the `time_s` of sample 1
    /// and every row must sit on that grid.
    pub fn from_csv(text: &str) -> Result<Self, RecordError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            Some((i, h)) => {
                return Err(RecordError::Parse {
                    line: i + 1,
                    reason: format!("expected header `{CSV_HEADER}`, found `{h}`"),
                })
            }
            None => return Err(RecordError::TooShort),
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse_err = |reason: String| RecordError::Parse { line: i + 1, reason };
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 columns, found {}", fields.len())));
            }
            let index: usize = fields[0].parse().map_err(|e| parse_err(format!("index: {e}")))?;
            if index != samples.len() {
                return Err(parse_err(format!("expected index {}, found {index}", samples.len())));
            }
            let t: f64 = fields[1].parse().map_err(|e| parse_err(format!("time_s: {e}")))?;
            let y: f64 = fields[2].parse().map_err(|e| parse_err(format!("y_fractional: {e}")))?;
            times.push((i + 1, t));
            samples.push(y);
        }
        if samples.len() < 2 {
            return Err(RecordError::TooShort);
        }
        let tau0 = times[1].1 - times[0].1;
        for (k, (line, t)) in times.iter().enumerate() {
            let expected = k as f64 * tau0;
            if (t - expected).abs() > 1e-9 * expected.abs().max(tau0) {
                return Err(RecordError::NonUniform { line: *line });
            }
        }
        let record = Self { tau0, samples, metadata: RecordMetadata::default() };
        record.validate()?;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let samples = vec![1.0e-13, -2.345678901234567e-14, 0.0, 3.0e-300];
        let rec = FrequencyRecord::new(2.0, samples.clone()).unwrap();
        let back = FrequencyRecord::from_csv(&rec.to_csv()).unwrap();
        assert_eq!(back.tau0, 2.0);
        assert_eq!(
            back.samples.iter().map(|y| y.to_bits()).collect::<Vec<_>>(),
            samples.iter().map(|y| y.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(FrequencyRecord::from_csv("a,b\n"), Err(RecordError::Parse { line: 1, .. })));
        let text = format!("{CSV_HEADER}\n0,0,1\n1,1,x\n");
        assert!(matches!(FrequencyRecord::from_csv(&text), Err(RecordError::Parse { line: 3, .. })));
        let text = format!("{CSV_HEADER}\n0,0,1\n1,1,1\n2,5,1\n");
        assert!(matches!(FrequencyRecord::from_csv(&text), Err(RecordError::NonUniform { line: 4 })));
        assert!(FrequencyRecord::new(0.0, vec![1.0]).is_err());
        assert!(FrequencyRecord::new(1.0, vec![f64::NAN]).is_err());
    }
}
