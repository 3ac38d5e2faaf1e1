//! Word-count statistics over generated instructions, and label agreement.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use instrir_core::{word_count, LengthFormat, Style};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::records::InstructionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WordStats {
    pub count: usize,
    pub min: usize,
    pub mean: f64,
    pub max: usize,
}

impl WordStats {
    fn from_counts(counts: &[usize]) -> Option<Self> {
        let (&min, &max) = (counts.iter().min()?, counts.iter().max()?);
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        Some(Self {
            count: counts.len(),
            min,
            mean,
            max,
        })
    }

    pub fn mean_rounded(&self) -> u64 {
        self.mean.round() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub cells: BTreeMap<(Style, LengthFormat), WordStats>,
    pub by_style: BTreeMap<Style, WordStats>,
    pub by_length: BTreeMap<LengthFormat, WordStats>,
    pub all: WordStats,
}

impl DatasetStats {
    /// Tab-separated `group\tcategory\tcount\tmin\tmean\tmax`, means rounded.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("group\tcategory\tcount\tmin\tmean\tmax\n");
        let mut row = |group: &str, cat: String, s: &WordStats| {
            let _ = writeln!(out, "{group}\t{cat}\t{}\t{}\t{}\t{}", s.count, s.min, s.mean_rounded(), s.max);
        };
        for (style, s) in &self.by_style {
            row("style", style.to_string(), s);
        }
        for (length, s) in &self.by_length {
            row("length", length.to_string(), s);
        }
        for ((style, length), s) in &self.cells {
            row("cell", format!("{style}/{length}"), s);
        }
        row("all", "all".into(), &self.all);
        out
    }
}

/// Whitespace word counts of successful instructions, per cell, per style,
/// per length and overall.
pub fn dataset_stats(records: &[InstructionRecord]) -> Result<DatasetStats> {
    let mut cells: BTreeMap<(Style, LengthFormat), Vec<usize>> = BTreeMap::new();
    let mut by_style: BTreeMap<Style, Vec<usize>> = BTreeMap::new();
    let mut by_length: BTreeMap<LengthFormat, Vec<usize>> = BTreeMap::new();
    let mut all = Vec::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        let n = word_count(r.instruction.as_deref().unwrap_or_default());
        cells.entry((r.style, r.length)).or_default().push(n);
        by_style.entry(r.style).or_default().push(n);
        by_length.entry(r.length).or_default().push(n);
        all.push(n);
    }
    let all = WordStats::from_counts(&all)
        .ok_or_else(|| Error::InvalidArgument("no successful instruction records".into()))?;
    fn summarize<K: Ord>(m: BTreeMap<K, Vec<usize>>) -> BTreeMap<K, WordStats> {
        m.into_iter()
            .filter_map(|(k, v)| WordStats::from_counts(&v).map(|s| (k, s)))
            .collect()
    }
    Ok(DatasetStats {
        cells: summarize(cells),
        by_style: summarize(by_style),
        by_length: summarize(by_length),
        all,
    })
}

/// Fraction of positions where two binary label vectors agree.
pub fn agreement(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "label vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("label vectors are empty".into()));
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}
