//! Domain types shared across the toolkit.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A corpus passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    pub title: String,
    pub text: String,
}

impl Passage {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            text: text.into(),
        }
    }

    /// Title and text joined the way the retrievers index them.
    pub fn full_text(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else {
            format!("{} {}", self.title, self.text)
        }
    }
}

/// Style feature requested for a generated instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    None,
    Negation,
    Background,
    Persona,
}

impl Style {
    pub const ALL: [Style; 4] = [Style::None, Style::Negation, Style::Background, Style::Persona];

    pub fn as_str(self) -> &'static str {
        match self {
            Style::None => "none",
            Style::Negation => "negation",
            Style::Background => "background",
            Style::Persona => "persona",
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Style::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown style `{s}`")))
    }
}

/// Length format requested for a generated instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthFormat {
    Short,
    Medium,
    Long,
    VeryLong,
}

impl LengthFormat {
    pub const ALL: [LengthFormat; 4] = [
        LengthFormat::Short,
        LengthFormat::Medium,
        LengthFormat::Long,
        LengthFormat::VeryLong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LengthFormat::Short => "short",
            LengthFormat::Medium => "medium",
            LengthFormat::Long => "long",
            LengthFormat::VeryLong => "very_long",
        }
    }
}

impl fmt::Display for LengthFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LengthFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LengthFormat::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown length format `{s}`")))
    }
}

/// Number of words in `text`, splitting on ASCII whitespace.
pub fn word_count(text: &str) -> usize {
    text.split_ascii_whitespace().count()
}

/// The single place where a query and its instruction (or prompt) are joined
/// into the text an encoder sees.
pub fn join_query_instruction(query: &str, instruction: Option<&str>) -> String {
    match instruction {
        Some(instr) if !instr.is_empty() => format!("{query} {instr}"),
        _ => query.to_string(),
    }
}

/// A query, optionally carrying a free-form instruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructedQuery {
    pub query_id: String,
    pub query: String,
    #[serde(default)]
    pub instruction: Option<String>,
    #[serde(default)]
    pub style: Option<Style>,
    #[serde(default)]
    pub length: Option<LengthFormat>,
}

impl InstructedQuery {
    pub fn bare(query_id: impl Into<String>, query: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            query: query.into(),
            instruction: None,
            style: None,
            length: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.query.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "query `{}` has empty text",
                self.query_id
            )));
        }
        let has_instr = self.instruction.is_some();
        if has_instr != self.style.is_some() || has_instr != self.length.is_some() {
            return Err(Error::InvalidArgument(format!(
                "query `{}`: style/length tags must be present iff an instruction is",
                self.query_id
            )));
        }
        Ok(())
    }

    /// Text handed to an encoder.
    pub fn text(&self) -> String {
        join_query_instruction(&self.query, self.instruction.as_deref())
    }
}

/// Graded relevance judgments keyed by query then doc.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Judgments {
    grades: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Judgments {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a grade; returns false if the key already existed (the grade is
    /// left untouched in that case).
    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) -> bool {
        let docs = self.grades.entry(query_id.into()).or_default();
        match docs.entry(doc_id.into()) {
            std::collections::btree_map::Entry::Occupied(_) => false,
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(grade);
                true
            }
        }
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.grades.get(query_id)?.get(doc_id).copied()
    }

    pub fn query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.grades.get(query_id)
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.grades.contains_key(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.grades
            .iter()
            .flat_map(|(q, docs)| docs.iter().map(move |(d, g)| (q.as_str(), d.as_str(), *g)))
    }

    /// Number of docs with grade >= 1 for the query.
    pub fn num_relevant(&self, query_id: &str) -> usize {
        self.grades
            .get(query_id)
            .map_or(0, |docs| docs.values().filter(|&&g| g >= 1).count())
    }

    pub fn len(&self) -> usize {
        self.grades.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A retrieved document and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(doc_id: impl Into<String>, score: f64) -> Self {
        Self {
            doc_id: doc_id.into(),
            score,
        }
    }
}

/// Rounds a score to the 6-decimal precision used on disk.
pub fn quantize_score(score: f64) -> f64 {
    let q = (score * 1e6).round() / 1e6;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Canonical ranking order: descending score, ties by ascending doc id.
pub fn ranking_order(a: &ScoredDoc, b: &ScoredDoc) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

/// Ranked result lists per query.
///
/// Scores are stored at the 6-decimal precision used by run files, so an
/// in-memory list and its serialized form always agree on tie order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunList {
    tag: String,
    queries: BTreeMap<String, Vec<ScoredDoc>>,
}

impl RunList {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            queries: BTreeMap::new(),
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Sets the ranked list of a query. Scores are quantized and the list is
    /// sorted into canonical order; duplicate doc ids and non-finite scores are
    /// rejected.
    pub fn insert(&mut self, query_id: impl Into<String>, docs: Vec<ScoredDoc>) -> Result<()> {
        let query_id = query_id.into();
        let mut seen = HashSet::with_capacity(docs.len());
        let mut docs = docs;
        for d in &mut docs {
            if !d.score.is_finite() {
                return Err(Error::RunOrder {
                    query_id,
                    message: format!("non-finite score for doc `{}`", d.doc_id),
                });
            }
            if !seen.insert(d.doc_id.clone()) {
                return Err(Error::RunOrder {
                    query_id,
                    message: format!("duplicate doc `{}`", d.doc_id),
                });
            }
            d.score = quantize_score(d.score);
        }
        docs.sort_by(ranking_order);
        self.queries.insert(query_id, docs);
        Ok(())
    }

    pub fn get(&self, query_id: &str) -> Option<&[ScoredDoc]> {
        self.queries.get(query_id).map(Vec::as_slice)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[ScoredDoc])> {
        self.queries.iter().map(|(q, d)| (q.as_str(), d.as_slice()))
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    /// 1-based rank of a doc within a query's list.
    pub fn rank_of(&self, query_id: &str, doc_id: &str) -> Option<usize> {
        self.queries
            .get(query_id)?
            .iter()
            .position(|d| d.doc_id == doc_id)
            .map(|i| i + 1)
    }

    /// Checks the ordering invariant for every query.
    pub fn validate(&self) -> Result<()> {
        for (qid, docs) in &self.queries {
            let mut seen = HashSet::with_capacity(docs.len());
            for (i, d) in docs.iter().enumerate() {
                if !seen.insert(d.doc_id.as_str()) {
                    return Err(Error::RunOrder {
                        query_id: qid.clone(),
                        message: format!("duplicate doc `{}`", d.doc_id),
                    });
                }
                if i > 0 && ranking_order(&docs[i - 1], d) != std::cmp::Ordering::Less {
                    return Err(Error::RunOrder {
                        query_id: qid.clone(),
                        message: format!(
                            "rank {} (`{}`) is out of order after `{}`",
                            i + 1,
                            d.doc_id,
                            docs[i - 1].doc_id
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Where a training negative came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeSource {
    Hard,
    Instruction,
}

/// A training negative: passage fields plus its source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainNegative {
    #[serde(flatten)]
    pub passage: Passage,
    pub source: NegativeSource,
}

/// One contrastive training example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainInstance {
    pub query_id: String,
    pub query: String,
    pub instruction: Option<String>,
    pub style: Option<Style>,
    pub length: Option<LengthFormat>,
    pub positive: Passage,
    pub negatives: Vec<TrainNegative>,
}

impl TrainInstance {
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::InvalidInstance {
            query_id: self.query_id.clone(),
            message,
        };
        if self.query.is_empty() {
            return Err(fail("empty query".into()));
        }
        let has_instr = self.instruction.is_some();
        if has_instr != self.style.is_some() || has_instr != self.length.is_some() {
            return Err(fail("style/length tags must be present iff an instruction is".into()));
        }
        if self.positive.doc_id.is_empty() {
            return Err(fail("positive has empty doc_id".into()));
        }
        let mut seen = HashSet::with_capacity(self.negatives.len());
        let mut in_hard_block = false;
        for neg in &self.negatives {
            let id = neg.passage.doc_id.as_str();
            if id.is_empty() {
                return Err(fail("negative has empty doc_id".into()));
            }
            if id == self.positive.doc_id {
                return Err(fail(format!("negative repeats the positive doc `{id}`")));
            }
            if !seen.insert(id) {
                return Err(fail(format!("duplicate negative doc `{id}`")));
            }
            match neg.source {
                NegativeSource::Hard => in_hard_block = true,
                NegativeSource::Instruction if in_hard_block => {
                    return Err(fail(format!(
                        "instruction negative `{id}` follows a hard negative"
                    )))
                }
                NegativeSource::Instruction => {}
            }
        }
        Ok(())
    }

    pub fn as_query(&self) -> InstructedQuery {
        InstructedQuery {
            query_id: self.query_id.clone(),
            query: self.query.clone(),
            instruction: self.instruction.clone(),
            style: self.style,
            length: self.length,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neg(id: &str, source: NegativeSource) -> TrainNegative {
        TrainNegative {
            passage: Passage::new(id, "", "x"),
            source,
        }
    }

    fn instance(negatives: Vec<TrainNegative>) -> TrainInstance {
        TrainInstance {
            query_id: "q1".into(),
            query: "volcano types".into(),
            instruction: None,
            style: None,
            length: None,
            positive: Passage::new("p", "", "pos"),
            negatives,
        }
    }

    #[test]
    fn instance_ordering_rules() {
        let ok = instance(vec![
            neg("a", NegativeSource::Instruction),
            neg("b", NegativeSource::Hard),
        ]);
        ok.validate().unwrap();

        let bad = instance(vec![
            neg("b", NegativeSource::Hard),
            neg("a", NegativeSource::Instruction),
        ]);
        assert!(bad.validate().is_err());

        let dup = instance(vec![neg("a", NegativeSource::Hard), neg("a", NegativeSource::Hard)]);
        assert!(dup.validate().is_err());

        let has_pos = instance(vec![neg("p", NegativeSource::Hard)]);
        assert!(has_pos.validate().is_err());
    }

    #[test]
    fn tags_track_instruction() {
        let mut inst = instance(vec![]);
        inst.instruction = Some("only recent".into());
        assert!(inst.validate().is_err());
        inst.style = Some(Style::Negation);
        inst.length = Some(LengthFormat::Short);
        inst.validate().unwrap();
    }

    #[test]
    fn run_insert_sorts_and_breaks_ties_by_doc_id() {
        let mut run = RunList::new("t");
        run.insert(
            "q",
            vec![
                ScoredDoc::new("d3", 1.0),
                ScoredDoc::new("d1", 2.0),
                ScoredDoc::new("d2", 1.0),
            ],
        )
        .unwrap();
        let ids: Vec<_> = run.get("q").unwrap().iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["d1", "d2", "d3"]);
        assert_eq!(run.rank_of("q", "d3"), Some(3));
        run.validate().unwrap();
    }

    #[test]
    fn run_rejects_duplicates() {
        let mut run = RunList::new("t");
        let err = run
            .insert("q", vec![ScoredDoc::new("d", 1.0), ScoredDoc::new("d", 0.5)])
            .unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn join_convention() {
        assert_eq!(join_query_instruction("q", None), "q");
        assert_eq!(join_query_instruction("q", Some("")), "q");
        assert_eq!(join_query_instruction("q", Some("be strict")), "q be strict");
    }

    #[test]
    fn word_count_uses_ascii_whitespace() {
        assert_eq!(word_count("a  b\tc\nd"), 4);
        assert_eq!(word_count(""), 0);
    }
}
