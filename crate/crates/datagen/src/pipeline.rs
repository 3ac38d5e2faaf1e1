//! The three stages chained in memory.

use instrir_core::TrainInstance;

use crate::assemble::{assemble_training_set, AssembleConfig, AuditEntry};
use crate::backend::LmBackend;
use crate::error::Result;
use crate::generate::{gen_instructions, mine_negatives, GenConfig};
use crate::judge::Judge;
use crate::records::{CandidateSet, InstructionRecord};

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub records: Vec<InstructionRecord>,
    pub candidate_sets: Vec<CandidateSet>,
    pub instances: Vec<TrainInstance>,
    pub audit: Vec<AuditEntry>,
}

pub fn run(
    sources: &[TrainInstance],
    generator: &dyn LmBackend,
    judge: &dyn Judge,
    gen: &GenConfig,
    assemble: &AssembleConfig,
) -> Result<PipelineOutput> {
    let records = gen_instructions(sources, generator, Some(judge), gen)?;
    let candidate_sets = mine_negatives(&records, generator, judge, gen);
    let (instances, audit) = assemble_training_set(sources, &records, &candidate_sets, assemble)?;
    Ok(PipelineOutput {
        records,
        candidate_sets,
        instances,
        audit,
    })
}
