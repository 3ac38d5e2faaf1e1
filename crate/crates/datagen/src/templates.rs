//! Versioned prompt templates with named `*_FILL_ME` slots.

use std::fs;
use std::path::Path;

use instrir_core::{LengthFormat, Passage, Style};

pub const SYSTEM: &str = include_str!("../assets/system.v1.txt");
pub const INSTRUCTION_GENERATION: &str = include_str!("../assets/instruction_generation.v1.txt");
pub const INSTRUCTION_NEGATIVES: &str = include_str!("../assets/instruction_negatives.v1.txt");
pub const JUDGE: &str = include_str!("../assets/judge.v1.txt");

pub const QUERY: &str = "QUERY_FILL_ME";
pub const INSTRUCTION: &str = "INSTRUCTION_FILL_ME";
pub const LENGTH_FORMAT: &str = "LENGTH_FORMAT_FILL_ME";
pub const REL_DOCS_NUM: &str = "REL_DOCS_NUM_FILL_ME";
pub const NON_REL_DOCS_NUM: &str = "NON_REL_DOCS_NUM_FILL_ME";
pub const POS_DOC: &str = "POS_DOC_FILL_ME";
pub const NEG_DOC: &str = "NEG_DOC_FILL_ME";
pub const PASSAGE: &str = "PASSAGE_FILL_ME";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub system: String,
    pub instruction_generation: String,
    pub instruction_negatives: String,
    pub judge: String,
}

impl Default for Templates {
    fn default() -> Self {
        Self {
            system: trim_newline(SYSTEM),
            instruction_generation: trim_newline(INSTRUCTION_GENERATION),
            instruction_negatives: trim_newline(INSTRUCTION_NEGATIVES),
            judge: trim_newline(JUDGE),
        }
    }
}

fn trim_newline(s: &str) -> String {
    s.trim_end_matches(['\n', '\r']).to_string()
}

impl Templates {
    /// Built-in templates, with any of `system.v1.txt`,
    /// `instruction_generation.v1.txt`, `instruction_negatives.v1.txt` or
    /// `judge.v1.txt` found in `dir` taking precedence.
    pub fn with_overrides(dir: &Path) -> std::io::Result<Self> {
        let mut t = Self::default();
        for (name, slot) in [
            ("system.v1.txt", &mut t.system),
            ("instruction_generation.v1.txt", &mut t.instruction_generation),
            ("instruction_negatives.v1.txt", &mut t.instruction_negatives),
            ("judge.v1.txt", &mut t.judge),
        ] {
            let path = dir.join(name);
            if path.exists() {
                *slot = trim_newline(&fs::read_to_string(path)?);
            }
        }
        Ok(t)
    }

    pub fn instruction_prompt(
        &self,
        query: &str,
        positives: &[Passage],
        negatives: &[Passage],
        style: Style,
        length: LengthFormat,
    ) -> String {
        let (pos, neg) = number_documents(positives, negatives);
        fill(
            &self.instruction_generation,
            &[
                (QUERY, query),
                (REL_DOCS_NUM, &positives.len().to_string()),
                (NON_REL_DOCS_NUM, &negatives.len().to_string()),
                (POS_DOC, &pos),
                (NEG_DOC, &neg),
                (LENGTH_FORMAT, &length_request(style, length)),
            ],
        )
    }

    pub fn negatives_prompt(&self, query: &str, instruction: &str) -> String {
        fill(
            &self.instruction_negatives,
            &[(QUERY, query), (INSTRUCTION, instruction)],
        )
    }

    pub fn judge_prompt(&self, query: &str, instruction: &str, passage: &Passage) -> String {
        fill(
            &self.judge,
            &[
                (QUERY, query),
                (INSTRUCTION, instruction),
                (PASSAGE, &passage.full_text()),
            ],
        )
    }
}

/// Replaces every slot occurrence in one left-to-right pass. Inserted values
/// are never rescanned, so text that happens to contain a slot name is
/// copied through literally. Where slot names overlap the longest wins.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut ordered: Vec<&(&str, &str)> = values.iter().filter(|(k, _)| !k.is_empty()).collect();
    ordered.sort_by_key(|(k, _)| std::cmp::Reverse(k.len()));
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while !rest.is_empty() {
        for (i, _) in rest.char_indices() {
            let tail = &rest[i..];
            if let Some((key, value)) = ordered.iter().find(|(k, _)| tail.starts_with(k)) {
                out.push_str(&rest[..i]);
                out.push_str(value);
                rest = &tail[key.len()..];
                continue 'scan;
            }
        }
        out.push_str(rest);
        break;
    }
    out
}

pub fn length_phrase(length: LengthFormat) -> &'static str {
    match length {
        LengthFormat::Short => "short (1-2 sentences)",
        LengthFormat::Medium => "medium (3-6 sentences)",
        LengthFormat::Long => "long (one paragraph)",
        LengthFormat::VeryLong => "very long (two paragraphs)",
    }
}

pub fn style_clause(style: Style) -> Option<&'static str> {
    match style {
        Style::None => None,
        Style::Negation => Some("phrased as a negation, explicitly stating what kinds of documents are not relevant"),
        Style::Background => Some("framed with generic background information about why the information is needed"),
        Style::Persona => Some("written from the persona of the person giving the query"),
    }
}

/// Value for the length slot: the length phrase plus an optional style clause.
pub fn length_request(style: Style, length: LengthFormat) -> String {
    match style_clause(style) {
        Some(clause) => format!("{} and {clause}", length_phrase(length)),
        None => length_phrase(length).to_string(),
    }
}

/// Renders documents as `Document [i]` blocks, relevant ones first,
/// numbered from 1 across both lists.
pub fn number_documents(positives: &[Passage], negatives: &[Passage]) -> (String, String) {
    let render = |docs: &[Passage], offset: usize| {
        docs.iter()
            .enumerate()
            .map(|(i, p)| {
                let head = format!("Document [{}]", offset + i + 1);
                if p.title.is_empty() {
                    format!("{head}: {}", p.text)
                } else {
                    format!("{head}: {}\n{}", p.title, p.text)
                }
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    };
    (render(positives, 0), render(negatives, positives.len()))
}
