//! Relevance judging of (query, instruction, passage) triples.

use instrir_core::Passage;

use crate::backend::{LmBackend, ModelParams};
use crate::error::{Error, Result};
use crate::templates::Templates;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeVerdict {
    pub relevant: bool,
    pub raw: String,
}

pub trait Judge: Send + Sync {
    fn judge(&self, query: &str, instruction: &str, passage: &Passage) -> Result<JudgeVerdict>;
}

/// Reads a yes/no style verdict from the start of a model answer.
pub fn parse_verdict(raw: &str) -> Option<bool> {
    let norm = raw.trim().to_lowercase();
    let norm = norm.trim_start_matches(|c: char| !c.is_alphanumeric());
    for (prefix, verdict) in [
        ("not relevant", false),
        ("non-relevant", false),
        ("nonrelevant", false),
        ("irrelevant", false),
        ("relevant", true),
        ("true", true),
        ("false", false),
        ("yes", true),
        ("no", false),
    ] {
        if let Some(rest) = norm.strip_prefix(prefix) {
            if rest.chars().next().is_none_or(|c| !c.is_alphanumeric()) {
                return Some(verdict);
            }
        }
    }
    None
}

/// Judge backed by a chat model prompted with the judge template.
pub struct LmJudge<B> {
    backend: B,
    templates: Templates,
    params: ModelParams,
}

impl<B: LmBackend> LmJudge<B> {
    pub fn new(backend: B, templates: Templates, params: ModelParams) -> Self {
        Self {
            backend,
            templates,
            params,
        }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }
}

impl<B: LmBackend> Judge for LmJudge<B> {
    fn judge(&self, query: &str, instruction: &str, passage: &Passage) -> Result<JudgeVerdict> {
        let prompt = self.templates.judge_prompt(query, instruction, passage);
        let request = self.params.request(&self.templates.system, prompt);
        let raw = self.backend.complete(&request)?;
        match parse_verdict(&raw) {
            Some(relevant) => Ok(JudgeVerdict { relevant, raw }),
            None => Err(Error::Response(format!("unreadable judge verdict: {raw:?}"))),
        }
    }
}
