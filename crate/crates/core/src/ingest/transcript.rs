use super::{IngestError, ResponseMatrix};
use crate::llm::{ParsedOutcome, PromptCondition, RequestParams};
use crate::scale::ScaleDefinition;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};

/// One administered (run, item) pair and its final outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub model: String,
    pub condition: PromptCondition,
    pub run_index: u32,
    pub item_id: String,
    #[serde(default)]
    pub system_text: String,
    pub prompt_text: String,
    pub raw_completion: Option<String>,
    pub parsed: ParsedOutcome,
    /// RFC 3339 wall-clock time of the final attempt.
    pub timestamp: String,
    pub request_params: RequestParams,
    #[serde(default)]
    pub retry_count: u32,
}

pub fn write_transcript<W: Write>(out: &mut W, rec: &TranscriptRecord) -> Result<(), IngestError> {
    serde_json::to_writer(&mut *out, rec).map_err(|e| IngestError::Json {
        line: 0,
        message: e.to_string(),
    })?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads JSONL transcripts, rejecting duplicate
/// `(model, condition, run_index, item_id)` keys.
pub fn read_transcripts<R: BufRead>(source: R) -> Result<Vec<TranscriptRecord>, IngestError> {
    let mut out = Vec::new();
    let mut keys = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TranscriptRecord = serde_json::from_str(&line).map_err(|e| IngestError::Json {
            line: i + 1,
            message: e.to_string(),
        })?;
        let key = (rec.model.clone(), rec.condition, rec.run_index, rec.item_id.clone());
        if !keys.insert(key) {
            return Err(IngestError::DuplicateCell {
                respondent: format!("{}/{:?}/run-{}", rec.model, rec.condition, rec.run_index),
                item: rec.item_id,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn run_label(run_index: u32) -> String {
    format!("run-{run_index:03}")
}

/// Runs become rows, items columns (scale order). Unparseable and failed
/// outcomes become missing cells.
pub fn transcripts_to_matrix(
    records: &[TranscriptRecord],
    scale: &ScaleDefinition,
    group_label: &str,
) -> Result<ResponseMatrix, IngestError> {
    let mut runs = BTreeSet::new();
    let mut present = BTreeSet::new();
    let mut cells: BTreeMap<(u32, &str), Option<f64>> = BTreeMap::new();
    for rec in records {
        if scale.item(&rec.item_id).is_none() {
            return Err(IngestError::UnknownItemColumn(rec.item_id.clone()));
        }
        runs.insert(rec.run_index);
        present.insert(rec.item_id.as_str());
        let v = match &rec.parsed {
            ParsedOutcome::Scored(s) => Some(s.value),
            _ => None,
        };
        if cells.insert((rec.run_index, &rec.item_id), v).is_some() {
            return Err(IngestError::DuplicateCell {
                respondent: run_label(rec.run_index),
                item: rec.item_id.clone(),
            });
        }
    }
    let item_ids: Vec<String> = scale
        .items
        .iter()
        .filter(|i| present.contains(i.id.as_str()))
        .map(|i| i.id.clone())
        .collect();
    let grid = runs
        .iter()
        .flat_map(|r| {
            item_ids
                .iter()
                .map(|id| cells.get(&(*r, id.as_str())).copied().flatten())
                .collect::<Vec<_>>()
        })
        .collect();
    ResponseMatrix::new(
        group_label,
        runs.iter().map(|r| run_label(*r)).collect(),
        item_ids,
        grid,
        scale.reference(),
    )
}
