//! Instruction and instruction-negative generation over pluggable, cached
//! chat-model backends.

pub mod assemble;
pub mod backend;
pub mod error;
pub mod generate;
pub mod judge;
pub mod records;
pub mod pipeline;
pub mod repair;
pub mod stats;
pub mod templates;

pub use error::{Error, Result};
