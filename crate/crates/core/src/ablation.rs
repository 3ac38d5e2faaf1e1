//! Control datasets built from a training set: the query repeated to the
//! instruction's length, a generic task description in place of the
//! instruction, and instructions shuffled across queries.
//!
//! Every transform keeps instance count, query ids, positives and negatives.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{word_count, LengthFormat, Style, TrainInstance};

/// The shipped pool of 50 generic retrieval task descriptions.
pub const GENERIC_INSTRUCTIONS: &str = include_str!("../assets/generic_instructions.txt");
pub const GENERIC_POOL_SIZE: usize = 50;

pub fn default_generic_pool() -> Vec<String> {
    parse_pool(GENERIC_INSTRUCTIONS)
}

/// One entry per non-blank line.
pub fn parse_pool(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    RepeatQuery,
    GenericInstruction,
    SwapInstruction,
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repeat-query" | "repeat_query" => Ok(Self::RepeatQuery),
            "generic-instruction" | "generic_instruction" | "generic" => Ok(Self::GenericInstruction),
            "swap-instruction" | "swap_instruction" | "swap" => Ok(Self::SwapInstruction),
            other => Err(Error::InvalidArgument(format!("unknown transform `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub seed: u64,
    pub generic_pool: Vec<String>,
    /// Swap only: forbid an instance from keeping its own instruction.
    pub derangement: bool,
}

impl TransformSpec {
    pub fn new(kind: TransformKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            generic_pool: default_generic_pool(),
            derangement: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == TransformKind::GenericInstruction && self.generic_pool.len() != GENERIC_POOL_SIZE {
            return Err(Error::InvalidArgument(format!(
                "generic instruction pool must have {GENERIC_POOL_SIZE} entries, found {}",
                self.generic_pool.len()
            )));
        }
        Ok(())
    }
}

/// A transformed instance; `passed_through` marks inputs the transform could
/// not apply to (returned unchanged).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transformed {
    pub instance: TrainInstance,
    pub passed_through: bool,
}

/// Replaces the instruction with the query repeated the fewest whole times
/// needed to reach the instruction's word count.
pub fn repeat_query(instance: &TrainInstance) -> Transformed {
    let query_words = word_count(&instance.query);
    let Some(instruction) = instance.instruction.as_deref() else {
        return Transformed {
            instance: instance.clone(),
            passed_through: true,
        };
    };
    if query_words == 0 {
        return Transformed {
            instance: instance.clone(),
            passed_through: true,
        };
    }
    let target = word_count(instruction);
    let repetitions = target.div_ceil(query_words).max(1);
    let mut out = instance.clone();
    out.instruction = Some(vec![instance.query.as_str(); repetitions].join(" "));
    Transformed {
        instance: out,
        passed_through: false,
    }
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Sets the instruction to a pool entry drawn uniformly. The draw depends
/// only on `(seed, index)`, so chunks can be processed independently.
pub fn generic_instruction(instance: &TrainInstance, pool: &[String], seed: u64, index: usize) -> Result<TrainInstance> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("generic instruction pool is empty".into()));
    }
    let pick = instance_rng(seed, index).random_range(0..pool.len());
    let mut out = instance.clone();
    out.instruction = Some(pool[pick].clone());
    out.style = Some(Style::None);
    out.length = Some(LengthFormat::Short);
    Ok(out)
}

/// Permutes instructions (with their style/length tags) across the
/// instances that have one. Everything else, instruction negatives
/// included, stays where it was.
pub fn swap_instructions(instances: &[TrainInstance], seed: u64, derangement: bool) -> Result<Vec<TrainInstance>> {
    let slots: Vec<usize> = instances
        .iter()
        .enumerate()
        .filter(|(_, inst)| inst.instruction.is_some())
        .map(|(i, _)| i)
        .collect();
    if derangement && slots.len() == 1 {
        return Err(Error::InvalidArgument(
            "a derangement needs at least two instructed instances".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..slots.len()).collect();
    loop {
        perm.shuffle(&mut rng);
        if !derangement || perm.iter().enumerate().all(|(i, &p)| i != p) {
            break;
        }
    }
    let mut out = instances.to_vec();
    for (dst, &src) in slots.iter().zip(&perm) {
        let from = &instances[slots[src]];
        out[*dst].instruction = from.instruction.clone();
        out[*dst].style = from.style;
        out[*dst].length = from.length;
    }
    Ok(out)
}

/// Applies a transform to a whole set. Also returns the number of
/// pass-through instances.
pub fn apply(spec: &TransformSpec, instances: &[TrainInstance]) -> Result<(Vec<TrainInstance>, usize)> {
    spec.validate()?;
    match spec.kind {
        TransformKind::RepeatQuery => {
            let mut passed = 0;
            let out = instances
                .iter()
                .map(|inst| {
                    let t = repeat_query(inst);
                    passed += usize::from(t.passed_through);
                    t.instance
                })
                .collect();
            Ok((out, passed))
        }
        TransformKind::GenericInstruction => {
            let out = instances
                .iter()
                .enumerate()
                .map(|(i, inst)| generic_instruction(inst, &spec.generic_pool, spec.seed, i))
                .collect::<Result<Vec<_>>>()?;
            Ok((out, 0))
        }
        TransformKind::SwapInstruction => {
            let out = swap_instructions(instances, spec.seed, spec.derangement)?;
            let passed = instances.iter().filter(|i| i.instruction.is_none()).count();
            Ok((out, passed))
        }
    }
}
