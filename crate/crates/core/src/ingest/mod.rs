//! File formats and loading for scales, response tables and transcripts.

mod responses;
mod scale_file;
mod transcript;

pub use responses::{load_responses, write_long, write_wide, Layout, LoadedResponses, ResponseMatrix};
pub use scale_file::{load_scale, parse_scale, scale_to_toml};
pub use transcript::{read_transcripts, run_label, transcripts_to_matrix, write_transcript, TranscriptRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema violation: {}", .0.join("; "))]
    SchemaViolation(Vec<String>),
    #[error("unknown item column '{0}'")]
    UnknownItemColumn(String),
    #[error("duplicate item column '{0}'")]
    DuplicateColumn(String),
    #[error("response matrix is empty")]
    EmptyMatrix,
    #[error("duplicate cell for respondent '{respondent}', item '{item}'")]
    DuplicateCell { respondent: String, item: String },
    #[error("duplicate respondent '{0}'")]
    DuplicateRespondent(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error on line {line}: {message}")]
    Json { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
