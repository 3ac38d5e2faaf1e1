//! Builds training instances from source instances, instruction records and
//! filtered candidates.

use std::collections::{HashMap, HashSet};

use instrir_core::{NegativeSource, Passage, TrainInstance, TrainNegative};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{CandidateSet, InstructionRecord, IntendedLabel};

pub const DEFAULT_NEGATIVES: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembleConfig {
    pub negatives_per_instance: usize,
    pub seed: u64,
    /// Also emit every source instance unchanged (without an instruction).
    pub include_originals: bool,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        Self {
            negatives_per_instance: DEFAULT_NEGATIVES,
            seed: 0,
            include_originals: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Instruction kept with the original positive.
    Instructed,
    /// Instruction kept with the generated positive in place of the original.
    Substituted,
    /// Instruction dropped; the source instance is used as is.
    Fallback,
    /// Unmodified copy requested via `include_originals`.
    Original,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAudit {
    pub doc_id: String,
    pub intended_label: IntendedLabel,
    pub judge_relevant: Option<bool>,
    pub used: bool,
    pub reason: String,
}

/// One line of the audit log, describing how one output instance was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub query_id: String,
    pub record_id: Option<String>,
    pub outcome: Outcome,
    pub reason: Option<String>,
    pub original_positive_still_relevant: Option<bool>,
    pub positive_doc_id: String,
    pub instruction_negatives: Vec<String>,
    pub hard_negatives: usize,
    pub candidates: Vec<CandidateAudit>,
}

fn audit_candidates(set: Option<&CandidateSet>, outcome: Outcome, used_negatives: &HashSet<&str>) -> Vec<CandidateAudit> {
    let Some(set) = set else { return Vec::new() };
    set.candidates
        .iter()
        .map(|c| {
            let id = c.passage.doc_id.as_str();
            let (used, reason) = match (c.intended_label, c.judge_relevant) {
                (_, None) => (false, "judge failure"),
                (IntendedLabel::InstructionNegative, Some(true)) => (false, "judged relevant under the instruction"),
                (IntendedLabel::InstructionNegative, Some(false)) if used_negatives.contains(id) => (true, "kept"),
                (IntendedLabel::InstructionNegative, Some(false)) => (false, "instruction dropped"),
                (IntendedLabel::InstructionPositive, Some(false)) => (false, "judged not relevant under the instruction"),
                (IntendedLabel::InstructionPositive, Some(true)) if outcome == Outcome::Substituted => {
                    (true, "substituted for the original positive")
                }
                (IntendedLabel::InstructionPositive, Some(true)) => (false, "not needed"),
            };
            CandidateAudit {
                doc_id: id.to_string(),
                intended_label: c.intended_label,
                judge_relevant: c.judge_relevant,
                used,
                reason: reason.to_string(),
            }
        })
        .collect()
}

/// Fills `instruction_negatives` up to `n` with hard negatives drawn without
/// replacement from the source pool, seeded by `(seed, position)`.
fn build_negatives(
    source: &TrainInstance,
    positive_id: &str,
    instruction_negatives: Vec<Passage>,
    n: usize,
    seed: u64,
    position: usize,
) -> Result<(Vec<TrainNegative>, usize)> {
    let mut taken: HashSet<String> = HashSet::new();
    taken.insert(positive_id.to_string());
    let mut negatives: Vec<TrainNegative> = instruction_negatives
        .into_iter()
        .filter(|p| taken.insert(p.doc_id.clone()))
        .take(n)
        .map(|passage| TrainNegative {
            passage,
            source: NegativeSource::Instruction,
        })
        .collect();
    let mut pool: Vec<&Passage> = Vec::with_capacity(source.negatives.len());
    for neg in &source.negatives {
        if taken.insert(neg.passage.doc_id.clone()) {
            pool.push(&neg.passage);
        }
    }
    let need = n - negatives.len();
    if need > pool.len() {
        return Err(Error::InsufficientNegatives {
            query_id: source.query_id.clone(),
            need: n,
            have: negatives.len() + pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(position as u64);
    let mut picks = sample(&mut rng, pool.len(), need).into_vec();
    picks.sort_unstable();
    negatives.extend(picks.into_iter().map(|i| TrainNegative {
        passage: pool[i].clone(),
        source: NegativeSource::Hard,
    }));
    Ok((negatives, need))
}

/// Assembles one output instance per instruction record (and per source
/// instance without a usable record). Output follows source order, then
/// record order within a query.
pub fn assemble_training_set(
    sources: &[TrainInstance],
    records: &[InstructionRecord],
    candidate_sets: &[CandidateSet],
    cfg: &AssembleConfig,
) -> Result<(Vec<TrainInstance>, Vec<AuditEntry>)> {
    let mut by_query: HashMap<&str, Vec<&InstructionRecord>> = HashMap::new();
    for r in records {
        by_query.entry(r.query_id.as_str()).or_default().push(r);
    }
    let sets: HashMap<&str, &CandidateSet> = candidate_sets.iter().map(|s| (s.record_id.as_str(), s)).collect();
    let n = cfg.negatives_per_instance;
    let mut out = Vec::new();
    let mut audit = Vec::new();

    for source in sources {
        if source.instruction.is_some() {
            return Err(Error::InvalidArgument(format!(
                "source query `{}` already has an instruction",
                source.query_id
            )));
        }
        let source_records = by_query.get(source.query_id.as_str()).cloned().unwrap_or_default();
        let mut plans: Vec<(Option<&InstructionRecord>, Outcome)> = Vec::new();
        if cfg.include_originals {
            plans.push((None, Outcome::Original));
        }
        if source_records.is_empty() {
            plans.push((None, Outcome::Fallback));
        }
        for r in source_records {
            plans.push((Some(r), Outcome::Instructed));
        }

        for (record, planned) in plans {
            let position = out.len();
            let set = record.and_then(|r| sets.get(r.record_id.as_str()).copied());
            let mut outcome = planned;
            let mut reason = None;
            let mut positive = source.positive.clone();
            let mut instr_negs: Vec<Passage> = Vec::new();
            let mut instruction = None;
            match record {
                None if planned == Outcome::Fallback => reason = Some("no instruction record".to_string()),
                None => {}
                Some(r) if !r.is_ok() => {
                    outcome = Outcome::Fallback;
                    reason = Some(format!("instruction generation failed: {}", r.error.as_deref().unwrap_or("unknown")));
                }
                Some(r) => {
                    let generated_positive = set.and_then(CandidateSet::kept_positive);
                    if r.original_positive_still_relevant != Some(true) {
                        match generated_positive {
                            Some(c) => {
                                outcome = Outcome::Substituted;
                                positive = c.passage.clone();
                            }
                            None => {
                                outcome = Outcome::Fallback;
                                reason = Some(
                                    "original positive not relevant under the instruction and no accepted generated positive"
                                        .to_string(),
                                );
                            }
                        }
                    }
                    if outcome != Outcome::Fallback {
                        instruction = Some(r);
                        if let Some(set) = set {
                            instr_negs = set.kept_negatives().map(|c| c.passage.clone()).collect();
                        }
                    }
                }
            }

            let (negatives, hard) = build_negatives(source, &positive.doc_id, instr_negs, n, cfg.seed, position)?;
            let instruction_ids: Vec<String> = negatives
                .iter()
                .filter(|x| x.source == NegativeSource::Instruction)
                .map(|x| x.passage.doc_id.clone())
                .collect();
            let used: HashSet<&str> = instruction_ids.iter().map(String::as_str).collect();
            let candidates = if outcome == Outcome::Original {
                Vec::new()
            } else {
                audit_candidates(set, outcome, &used)
            };
            audit.push(AuditEntry {
                query_id: source.query_id.clone(),
                record_id: record.map(|r| r.record_id.clone()),
                outcome,
                reason,
                original_positive_still_relevant: record.and_then(|r| r.original_positive_still_relevant),
                positive_doc_id: positive.doc_id.clone(),
                instruction_negatives: instruction_ids,
                hard_negatives: hard,
                candidates,
            });
            let instance = TrainInstance {
                query_id: source.query_id.clone(),
                query: source.query.clone(),
                instruction: instruction.and_then(|r| r.instruction.clone()),
                style: instruction.map(|r| r.style),
                length: instruction.map(|r| r.length),
                positive,
                negatives,
            };
            instance.validate()?;
            out.push(instance);
        }
    }
    Ok((out, audit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::{CandidatePassage, ExplanationTag, Status};
    use instrir_core::{LengthFormat, Style};

    fn source(qid: &str, pool: usize) -> TrainInstance {
        TrainInstance {
            query_id: qid.into(),
            query: "q text".into(),
            instruction: None,
            style: None,
            length: None,
            positive: Passage::new(format!("{qid}-pos"), "", "pos"),
            negatives: (0..pool)
                .map(|i| TrainNegative {
                    passage: Passage::new(format!("{qid}-h{i:02}"), "", "hard"),
                    source: NegativeSource::Hard,
                })
                .collect(),
        }
    }

    fn record(qid: &str, still_relevant: Option<bool>) -> InstructionRecord {
        InstructionRecord {
            record_id: qid.into(),
            query_id: qid.into(),
            query: "q text".into(),
            style: Style::Persona,
            length: LengthFormat::Long,
            status: Status::Ok,
            instruction: Some("only formation".into()),
            generated: None,
            original_positive_still_relevant: still_relevant,
            judge_raw: None,
            error: None,
        }
    }

    fn cand(id: String, label: IntendedLabel, keep: bool) -> CandidatePassage {
        let relevant = match label {
            IntendedLabel::InstructionPositive => keep,
            IntendedLabel::InstructionNegative => !keep,
        };
        CandidatePassage {
            passage: Passage::new(id, "", "gen"),
            intended_label: label,
            explanation_tag: if label == IntendedLabel::InstructionPositive {
                ExplanationTag::None
            } else {
                ExplanationTag::Omission
            },
            explanation: String::new(),
            judge_relevant: Some(relevant),
            judge_keep: keep,
            judge_raw: None,
        }
    }

    fn set(qid: &str, pos_keep: bool, neg_keep: [bool; 3]) -> CandidateSet {
        let mut candidates = vec![cand(format!("{qid}-gen0"), IntendedLabel::InstructionPositive, pos_keep)];
        for (i, keep) in neg_keep.into_iter().enumerate() {
            candidates.push(cand(format!("{qid}-gen{}", i + 1), IntendedLabel::InstructionNegative, keep));
        }
        CandidateSet {
            record_id: qid.into(),
            query_id: qid.into(),
            status: Status::Ok,
            candidates,
            error: None,
        }
    }

    #[test]
    fn kept_instruction_negatives_come_first() {
        let (out, audit) = assemble_training_set(
            &[source("q1", 30)],
            &[record("q1", Some(true))],
            &[set("q1", true, [true, false, true])],
            &AssembleConfig::default(),
        )
        .unwrap();
        let inst = &out[0];
        assert_eq!(inst.negatives.len(), 15);
        let sources: Vec<_> = inst.negatives.iter().map(|n| n.source).collect();
        assert_eq!(&sources[..2], [NegativeSource::Instruction; 2]);
        assert!(sources[2..].iter().all(|s| *s == NegativeSource::Hard));
        assert_eq!(inst.negatives[0].passage.doc_id, "q1-gen1");
        assert_eq!(inst.negatives[1].passage.doc_id, "q1-gen3");
        assert_eq!(inst.positive.doc_id, "q1-pos");
        assert_eq!(inst.instruction.as_deref(), Some("only formation"));
        assert_eq!(audit[0].outcome, Outcome::Instructed);
        assert_eq!(audit[0].hard_negatives, 13);
        assert!(!audit[0].candidates[2].used);
    }

    #[test]
    fn rejected_original_is_substituted() {
        let (out, audit) = assemble_training_set(
            &[source("q1", 30)],
            &[record("q1", Some(false))],
            &[set("q1", true, [false, false, false])],
            &AssembleConfig::default(),
        )
        .unwrap();
        assert_eq!(out[0].positive.doc_id, "q1-gen0");
        assert_eq!(audit[0].outcome, Outcome::Substituted);
        assert!(out[0].negatives.iter().all(|n| n.source == NegativeSource::Hard));
    }

    #[test]
    fn both_positives_rejected_falls_back_to_source() {
        let (out, audit) = assemble_training_set(
            &[source("q1", 30)],
            &[record("q1", Some(false))],
            &[set("q1", false, [true, true, true])],
            &AssembleConfig::default(),
        )
        .unwrap();
        assert_eq!(out[0].instruction, None);
        assert_eq!(out[0].positive.doc_id, "q1-pos");
        assert!(out[0].negatives.iter().all(|n| n.source == NegativeSource::Hard));
        assert_eq!(audit[0].outcome, Outcome::Fallback);
    }

    #[test]
    fn missing_records_fall_back_and_originals_are_optional() {
        let cfg = AssembleConfig {
            include_originals: true,
            ..AssembleConfig::default()
        };
        let (out, audit) = assemble_training_set(
            &[source("q1", 30), source("q2", 30)],
            &[record("q1", Some(true))],
            &[],
            &cfg,
        )
        .unwrap();
        let outcomes: Vec<_> = audit.iter().map(|a| a.outcome).collect();
        assert_eq!(outcomes, [Outcome::Original, Outcome::Instructed, Outcome::Original, Outcome::Fallback]);
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn insufficient_pool_is_an_error() {
        let err = assemble_training_set(
            &[source("q1", 10)],
            &[record("q1", Some(true))],
            &[set("q1", true, [true, true, false])],
            &AssembleConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InsufficientNegatives { need: 15, have: 12, .. }), "{err}");
    }

    #[test]
    fn same_seed_same_output_and_seed_matters() {
        let sources: Vec<_> = (0..5).map(|i| source(&format!("q{i}"), 30)).collect();
        let run = |seed| {
            let cfg = AssembleConfig { seed, ..AssembleConfig::default() };
            assemble_training_set(&sources, &[], &[], &cfg).unwrap().0
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }
}
