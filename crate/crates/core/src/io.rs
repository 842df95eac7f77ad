//! File formats: CSV data files and JSON partition/report files.
//!
//! Data files carry one record per line, either `y` or `y,w`; a single
//! header line is tolerated. Partition files are JSON with 1-based inclusive
//! indices (`{"n": ..., "blocks": [[lo, hi], ...]}` for block partitions,
//! `{"m": ..., "P": [...], "N": [...], "A": [...]}` for sign partitions);
//! internal indices are 0-based, converted here and only here.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockPartition, SignLabel, SignPartition, SolveReport};

/// Reads `y` and optional per-point weights from a CSV file.
pub fn read_data_csv(path: &Path) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    parse_data_csv(&text)
}

/// CSV parsing split out for tests; `line` numbers in errors are 1-based.
pub fn parse_data_csv(text: &str) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut y = Vec::new();
    let mut w: Option<Vec<f64>> = None;
    let mut saw_record = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let first = fields.next().unwrap_or("");
        let value = match first.parse::<f64>() {
            Ok(v) => v,
            Err(_) if !saw_record && idx == 0 => continue, // header line
            Err(_) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected a number, found {first:?}"),
                })
            }
        };
        let weight = match fields.next() {
            Some(field) if !field.is_empty() => {
                Some(field.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("expected a weight, found {field:?}"),
                })?)
            }
            _ => None,
        };
        match (&mut w, weight) {
            (None, Some(wi)) if !saw_record => w = Some(vec![wi]),
            (None, Some(_)) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "weight column appears only on some lines".into(),
                })
            }
            (Some(ws), Some(wi)) => ws.push(wi),
            (Some(_), None) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "weight column missing on this line".into(),
                })
            }
            (None, None) => {}
        }
        y.push(value);
        saw_record = true;
    }
    if y.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data records found".into() });
    }
    Ok((y, w))
}

/// Writes one value per line with shortest round-trip f64 formatting.
pub fn write_data_csv(path: &Path, y: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(y.len() * 20);
    for v in y {
        out.push_str(&format!("{v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct BlockPartitionFile {
    n: usize,
    blocks: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct SignPartitionFile {
    m: usize,
    #[serde(rename = "P")]
    pos: Vec<usize>,
    #[serde(rename = "N")]
    neg: Vec<usize>,
    #[serde(rename = "A")]
    active: Vec<usize>,
}

pub fn read_block_partition(path: &Path) -> Result<BlockPartition> {
    let text = fs::read_to_string(path)?;
    let file: BlockPartitionFile = serde_json::from_str(&text)?;
    let mut ranges = Vec::with_capacity(file.blocks.len());
    for [lo, hi] in file.blocks {
        if lo == 0 || hi < lo {
            return Err(Error::InvalidPartition(format!(
                "block [{lo}, {hi}] is not valid 1-based inclusive"
            )));
        }
        ranges.push((lo - 1, hi)); // 1-based inclusive -> 0-based half-open
    }
    BlockPartition::from_ranges(file.n, &ranges)
}

pub fn write_block_partition(path: &Path, part: &BlockPartition) -> Result<()> {
    let file = BlockPartitionFile {
        n: part.n(),
        blocks: part.ranges().iter().map(|&(lo, hi)| [lo + 1, hi]).collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn read_sign_partition(path: &Path) -> Result<SignPartition> {
    let text = fs::read_to_string(path)?;
    let file: SignPartitionFile = serde_json::from_str(&text)?;
    let to_zero_based = |set: Vec<usize>, name: &str| -> Result<Vec<usize>> {
        set.into_iter()
            .map(|j| {
                j.checked_sub(1).ok_or_else(|| {
                    Error::InvalidPartition(format!("index 0 in {name}: indices are 1-based"))
                })
            })
            .collect()
    };
    let pos = to_zero_based(file.pos, "P")?;
    let neg = to_zero_based(file.neg, "N")?;
    let active = to_zero_based(file.active, "A")?;
    SignPartition::from_sets(file.m, &pos, &neg, &active)
}

pub fn write_sign_partition(path: &Path, part: &SignPartition) -> Result<()> {
    let one_based = |label| -> Vec<usize> {
        part.indices_of(label).iter().map(|j| j + 1).collect()
    };
    let file = SignPartitionFile {
        m: part.len(),
        pos: one_based(SignLabel::Positive),
        neg: one_based(SignLabel::Negative),
        active: one_based(SignLabel::Active),
    };
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn write_report(path: &Path, report: &SolveReport) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<SolveReport> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
