//! Intermediate pipeline records, serialized as JSONL between stages.

use instrir_core::{LengthFormat, Passage, Style};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The model answered but the answer could not be used.
    ParseFailed,
    /// The backend never produced an answer.
    BackendFailed,
}

/// One generated instruction for one (query, style, length) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub record_id: String,
    pub query_id: String,
    pub query: String,
    pub style: Style,
    pub length: LengthFormat,
    pub status: Status,
    pub instruction: Option<String>,
    /// The parsed model response, passed through untouched.
    pub generated: Option<serde_json::Value>,
    pub original_positive_still_relevant: Option<bool>,
    pub judge_raw: Option<String>,
    pub error: Option<String>,
}

impl InstructionRecord {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok && self.instruction.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntendedLabel {
    InstructionPositive,
    InstructionNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationTag {
    DifferentInterpretation,
    Omission,
    MentionNonRelevantFlag,
    None,
}

impl ExplanationTag {
    /// Reads the category prefix of an explanation such as
    /// `"omission - it does not mention formation"`.
    pub fn parse(explanation: &str) -> Option<Self> {
        let norm = explanation
            .trim_start_matches(|c: char| c.is_whitespace() || c == '"' || c == '\'' || c == '[')
            .to_lowercase()
            .replace(['_', '-'], " ");
        let norm = norm.split_whitespace().collect::<Vec<_>>().join(" ");
        if norm.starts_with("different interpretation") {
            Some(Self::DifferentInterpretation)
        } else if norm.starts_with("omission") {
            Some(Self::Omission)
        } else if norm.starts_with("mention non relevant")
            || norm.starts_with("mention nonrelevant")
            || norm.starts_with("mentions non relevant")
        {
            Some(Self::MentionNonRelevantFlag)
        } else if norm.starts_with("none") {
            Some(Self::None)
        } else {
            None
        }
    }
}

/// A generated passage and what the judge made of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePassage {
    pub passage: Passage,
    pub intended_label: IntendedLabel,
    pub explanation_tag: ExplanationTag,
    pub explanation: String,
    /// Judge verdict under query + instruction; `None` when judging failed.
    pub judge_relevant: Option<bool>,
    pub judge_keep: bool,
    pub judge_raw: Option<String>,
}

impl CandidatePassage {
    pub fn is_kept_negative(&self) -> bool {
        self.judge_keep && self.intended_label == IntendedLabel::InstructionNegative
    }

    pub fn is_kept_positive(&self) -> bool {
        self.judge_keep && self.intended_label == IntendedLabel::InstructionPositive
    }
}

/// All candidates generated for one instruction record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub record_id: String,
    pub query_id: String,
    pub status: Status,
    pub candidates: Vec<CandidatePassage>,
    pub error: Option<String>,
}

impl CandidateSet {
    pub fn kept_negatives(&self) -> impl Iterator<Item = &CandidatePassage> {
        self.candidates.iter().filter(|c| c.is_kept_negative())
    }

    pub fn kept_positive(&self) -> Option<&CandidatePassage> {
        self.candidates.iter().find(|c| c.is_kept_positive())
    }
}
