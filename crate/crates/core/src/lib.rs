pub(crate) mod matrix_rows;

pub mod cli;
pub mod ingest;
pub mod intervention;
pub mod llm;
pub mod pipeline;
pub mod psychometrics;
pub mod report;
pub mod rsa;
pub mod scale;
pub mod sna;
pub mod stats;
pub mod synthgen;
