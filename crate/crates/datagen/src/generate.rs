//! Instruction generation, instruction-negative generation and judge filtering.

use instrir_core::{LengthFormat, Passage, Style, TrainInstance};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::backend::{LmBackend, ModelParams};
use crate::error::{Error, Result};
use crate::judge::Judge;
use crate::records::{
    CandidatePassage, CandidateSet, ExplanationTag, InstructionRecord, IntendedLabel, Status,
};
use crate::repair::parse_json;
use crate::templates::Templates;

pub const DEFAULT_CONCURRENCY: usize = 8;
pub const NEGATIVES_PER_RESPONSE: usize = 3;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub params: ModelParams,
    pub templates: Templates,
    pub seed: u64,
    /// Generate all 16 style/length cells per query instead of one sampled cell.
    pub exhaustive_grid: bool,
    /// Hard negatives shown to the model as the non-relevant documents.
    pub prompt_negatives: usize,
    pub concurrency: usize,
}

impl GenConfig {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self {
            params,
            templates: Templates::default(),
            seed,
            exhaustive_grid: false,
            prompt_negatives: 3,
            concurrency: DEFAULT_CONCURRENCY,
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The style/length cell assigned to the query at `index`.
pub fn sample_cell(seed: u64, index: usize) -> (Style, LengthFormat) {
    let mut rng = stream_rng(seed, index as u64);
    let style = Style::ALL[rng.random_range(0..Style::ALL.len())];
    let length = LengthFormat::ALL[rng.random_range(0..LengthFormat::ALL.len())];
    (style, length)
}

/// Runs `f` over `items` on at most `concurrency` workers, keeping input order.
pub fn bounded_map<T, U, F>(items: &[T], concurrency: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    let run = || items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(concurrency.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("falling back to the global thread pool: {e}");
            run()
        }
    }
}

fn failed_status(err: &Error) -> Status {
    match err {
        Error::Backend(_) => Status::BackendFailed,
        _ => Status::ParseFailed,
    }
}

fn parse_instruction(raw: &str) -> Result<(String, Value)> {
    let value = parse_json(raw).map_err(Error::Response)?;
    let instruction = value
        .get("instruction")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Response("missing string field `instruction`".into()))?
        .to_string();
    Ok((instruction, value))
}

/// Asks the model for one instruction in the given cell.
#[allow(clippy::too_many_arguments)]
pub fn gen_instruction(
    backend: &dyn LmBackend,
    templates: &Templates,
    params: &ModelParams,
    record_id: String,
    source: &TrainInstance,
    prompt_negatives: &[Passage],
    style: Style,
    length: LengthFormat,
) -> InstructionRecord {
    let mut record = InstructionRecord {
        record_id,
        query_id: source.query_id.clone(),
        query: source.query.clone(),
        style,
        length,
        status: Status::Ok,
        instruction: None,
        generated: None,
        original_positive_still_relevant: None,
        judge_raw: None,
        error: None,
    };
    let prompt = templates.instruction_prompt(
        &source.query,
        std::slice::from_ref(&source.positive),
        prompt_negatives,
        style,
        length,
    );
    let result = backend
        .complete(&params.request(&templates.system, prompt))
        .map_err(Error::from)
        .and_then(|raw| parse_instruction(&raw));
    match result {
        Ok((instruction, generated)) => {
            record.instruction = Some(instruction);
            record.generated = Some(generated);
        }
        Err(e) => {
            log::warn!("instruction generation failed for `{}`: {e}", record.record_id);
            record.status = failed_status(&e);
            record.error = Some(e.to_string());
        }
    }
    record
}

/// Whether the original positive survives the instruction. Judge failures
/// count as not relevant.
pub fn judge_original_positive(record: &mut InstructionRecord, positive: &Passage, judge: &dyn Judge) -> bool {
    let Some(instruction) = record.instruction.as_deref() else {
        return false;
    };
    let verdict = match judge.judge(&record.query, instruction, positive) {
        Ok(v) => {
            record.judge_raw = Some(v.raw);
            v.relevant
        }
        Err(e) => {
            log::warn!("judge failed on original positive of `{}`: {e}", record.record_id);
            record.judge_raw = Some(format!("error: {e}"));
            false
        }
    };
    record.original_positive_still_relevant = Some(verdict);
    verdict
}

/// Generates instruction records for every source instance, then judges the
/// original positive under each instruction when a judge is given.
pub fn gen_instructions(
    sources: &[TrainInstance],
    backend: &dyn LmBackend,
    judge: Option<&dyn Judge>,
    cfg: &GenConfig,
) -> Result<Vec<InstructionRecord>> {
    if let Some(s) = sources.iter().find(|s| s.instruction.is_some()) {
        return Err(Error::InvalidArgument(format!(
            "source query `{}` already has an instruction",
            s.query_id
        )));
    }
    let nested = bounded_map(sources, cfg.concurrency, |index, source| {
        let prompt_negatives = sample_prompt_negatives(source, cfg.prompt_negatives, cfg.seed, index);
        let cells: Vec<(String, Style, LengthFormat)> = if cfg.exhaustive_grid {
            Style::ALL
                .iter()
                .flat_map(|&s| LengthFormat::ALL.iter().map(move |&l| (s, l)))
                .map(|(s, l)| (format!("{}:{s}:{l}", source.query_id), s, l))
                .collect()
        } else {
            let (s, l) = sample_cell(cfg.seed, index);
            vec![(source.query_id.clone(), s, l)]
        };
        cells
            .into_iter()
            .map(|(id, style, length)| {
                let mut record = gen_instruction(
                    backend,
                    &cfg.templates,
                    &cfg.params,
                    id,
                    source,
                    &prompt_negatives,
                    style,
                    length,
                );
                if let (Some(judge), true) = (judge, record.is_ok()) {
                    judge_original_positive(&mut record, &source.positive, judge);
                }
                record
            })
            .collect::<Vec<_>>()
    });
    Ok(nested.into_iter().flatten().collect())
}

fn sample_prompt_negatives(source: &TrainInstance, n: usize, seed: u64, index: usize) -> Vec<Passage> {
    let pool = &source.negatives;
    let n = n.min(pool.len());
    // a stream disjoint from the cell draws
    let mut rng = stream_rng(seed ^ 0x6e65_6761_7469_7665, index as u64);
    let mut picks = sample(&mut rng, pool.len(), n).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| pool[i].passage.clone()).collect()
}

fn as_flag(value: &Value) -> Option<bool> {
    match value {
        Value::Bool(b) => Some(*b),
        Value::String(s) => match s.trim().to_lowercase().as_str() {
            "true" | "yes" => Some(true),
            "false" | "no" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

fn candidate_entries(value: &Value) -> Option<&Vec<Value>> {
    match value {
        Value::Array(items) => Some(items),
        Value::Object(map) => {
            let mut arrays = map.values().filter_map(Value::as_array);
            let first = arrays.next()?;
            arrays.next().is_none().then_some(first)
        }
        _ => None,
    }
}

/// Parses one negatives response into exactly one intended positive and
/// three intended negatives, in response order.
pub fn parse_candidates(raw: &str, record_id: &str) -> Result<Vec<CandidatePassage>> {
    let value = parse_json(raw).map_err(Error::Response)?;
    let entries = candidate_entries(&value)
        .ok_or_else(|| Error::Response("expected a JSON list of documents".into()))?;
    if entries.len() != NEGATIVES_PER_RESPONSE + 1 {
        return Err(Error::Response(format!(
            "expected {} documents, got {}",
            NEGATIVES_PER_RESPONSE + 1,
            entries.len()
        )));
    }
    let mut out = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let field = |key: &str| {
            entry
                .get(key)
                .ok_or_else(|| Error::Response(format!("document {i}: missing key `{key}`")))
        };
        let text = |key: &str| {
            field(key)?
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Response(format!("document {i}: `{key}` is not a string")))
        };
        let matches_both = as_flag(field("matches_both")?)
            .ok_or_else(|| Error::Response(format!("document {i}: `matches_both` is not a boolean")))?;
        let explanation = text("explanation")?;
        let passage_text = text("passage")?;
        if passage_text.trim().is_empty() {
            return Err(Error::Response(format!("document {i}: empty passage")));
        }
        let (label, tag) = if matches_both {
            (IntendedLabel::InstructionPositive, ExplanationTag::None)
        } else {
            match ExplanationTag::parse(&explanation) {
                Some(tag) if tag != ExplanationTag::None => (IntendedLabel::InstructionNegative, tag),
                _ => {
                    return Err(Error::Response(format!(
                        "document {i}: unrecognized explanation tag in {explanation:?}"
                    )))
                }
            }
        };
        out.push(CandidatePassage {
            passage: Passage::new(format!("{record_id}-gen{i}"), text("title")?, passage_text),
            intended_label: label,
            explanation_tag: tag,
            explanation,
            judge_relevant: None,
            judge_keep: false,
            judge_raw: None,
        });
    }
    let positives = out
        .iter()
        .filter(|c| c.intended_label == IntendedLabel::InstructionPositive)
        .count();
    if positives != 1 {
        return Err(Error::Response(format!("expected exactly 1 matching document, got {positives}")));
    }
    Ok(out)
}

/// Asks the model for candidate passages under the record's instruction.
pub fn gen_candidates(
    backend: &dyn LmBackend,
    templates: &Templates,
    params: &ModelParams,
    record: &InstructionRecord,
) -> CandidateSet {
    let mut set = CandidateSet {
        record_id: record.record_id.clone(),
        query_id: record.query_id.clone(),
        status: Status::Ok,
        candidates: Vec::new(),
        error: None,
    };
    let Some(instruction) = record.instruction.as_deref() else {
        set.status = record.status;
        set.error = Some("instruction record has no instruction".into());
        return set;
    };
    let prompt = templates.negatives_prompt(&record.query, instruction);
    let result = backend
        .complete(&params.request(&templates.system, prompt))
        .map_err(Error::from)
        .and_then(|raw| parse_candidates(&raw, &record.record_id));
    match result {
        Ok(candidates) => set.candidates = candidates,
        Err(e) => {
            log::warn!("candidate generation failed for `{}`: {e}", record.record_id);
            set.status = failed_status(&e);
            set.error = Some(e.to_string());
        }
    }
    set
}

/// Keeps a negative iff the judge calls it not relevant, and the positive iff
/// the judge calls it relevant. Judge failures leave a candidate unkept.
pub fn filter_candidates(set: &mut CandidateSet, query: &str, instruction: &str, judge: &dyn Judge) {
    for cand in &mut set.candidates {
        match judge.judge(query, instruction, &cand.passage) {
            Ok(v) => {
                cand.judge_relevant = Some(v.relevant);
                cand.judge_raw = Some(v.raw);
                cand.judge_keep = match cand.intended_label {
                    IntendedLabel::InstructionPositive => v.relevant,
                    IntendedLabel::InstructionNegative => !v.relevant,
                };
            }
            Err(e) => {
                log::warn!("judge failed on `{}`: {e}", cand.passage.doc_id);
                cand.judge_relevant = None;
                cand.judge_raw = Some(format!("error: {e}"));
                cand.judge_keep = false;
            }
        }
    }
}

/// Generates and filters candidates for every usable record.
pub fn mine_negatives(
    records: &[InstructionRecord],
    backend: &dyn LmBackend,
    judge: &dyn Judge,
    cfg: &GenConfig,
) -> Vec<CandidateSet> {
    let usable: Vec<&InstructionRecord> = records.iter().filter(|r| r.is_ok()).collect();
    bounded_map(&usable, cfg.concurrency, |_, record| {
        let mut set = gen_candidates(backend, &cfg.templates, &cfg.params, record);
        if set.status == Status::Ok {
            let instruction = record.instruction.as_deref().unwrap_or_default();
            filter_candidates(&mut set, &record.query, instruction, judge);
        }
        set
    })
}
