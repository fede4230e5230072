//! Genetic-programming symbolic regression with pluggable parent selection,
//! and an outer loop that evolves selection operators with a language model.

pub mod codemetrics;
pub mod dataio;
pub mod engine;
pub mod exprtree;
pub mod fitness;
pub mod host;
pub mod llm;
pub mod meta;
pub mod selection;
