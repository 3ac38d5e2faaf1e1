//! Core building blocks for instruction-following retrieval experiments:
//! TREC/JSONL file formats, ranking metrics and p-MRR, exact dense search,
//! BM25, ablation dataset transforms and prompt selection.

pub mod ablation;
pub mod bm25;
pub mod dense;
pub mod error;
pub mod jsonl;
pub mod metrics;
pub mod prompt_select;
pub mod trec;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    join_query_instruction, word_count, InstructedQuery, Judgments, LengthFormat, NegativeSource, Passage,
    RunList, ScoredDoc, Style, TrainInstance, TrainNegative,
};
