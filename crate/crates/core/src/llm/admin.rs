use super::client::{CallError, ChatClient, ChatMessage};
use super::{parse_response, render_prompt_with, EndpointConfig, ParsedOutcome, SessionPlan};
use crate::ingest::{write_transcript, IngestError, TranscriptRecord};
use crate::scale::ScaleDefinition;
use crate::stats::{round2, RngStream};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdminError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("endpoint unreachable after retries; aborted runs {runs:?}: {last_error}")]
    EndpointUnreachable { runs: Vec<u32>, last_error: String },
    #[error("endpoint rejected credentials ({status}); session aborted")]
    AuthFailure { status: u16 },
    #[error("failed to write transcript: {0}")]
    Transcript(#[from] IngestError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub transcripts: usize,
    pub completed: usize,
    pub unparseable: usize,
    pub failed: usize,
    pub retries: u32,
    /// Percent correct over parsed keyed responses.
    pub accuracy: Option<f64>,
    pub aborted_runs: Vec<u32>,
}

enum WorkerMsg {
    Record(usize, Box<TranscriptRecord>),
    Auth(u16),
}

fn backoff(base_ms: u64, attempt: u32, rng: &mut RngStream) -> Duration {
    let factor = 2f64.powi(attempt as i32) * (1.0 + 0.25 * rng.uniform());
    Duration::from_secs_f64(base_ms as f64 * factor / 1000.0)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs every (run, item) pair of `plan` against the endpoint and writes one
/// transcript line per pair to `out`, ordered by run then scale item order.
pub fn administer<W: Write>(
    plan: &SessionPlan,
    endpoint: &EndpointConfig,
    scale: &ScaleDefinition,
    out: &mut W,
) -> Result<SessionSummary, AdminError> {
    endpoint.validate().map_err(AdminError::InvalidConfig)?;
    if plan.runs < 1 {
        return Err(AdminError::InvalidConfig("runs must be at least 1".into()));
    }
    if plan.scale_ref != scale.reference() {
        return Err(AdminError::InvalidConfig(format!(
            "plan targets scale {:?} but {:?} was supplied",
            plan.scale_ref,
            scale.reference()
        )));
    }

    let client = ChatClient::new(endpoint);
    let tasks: Vec<(u32, usize)> = (0..plan.runs)
        .flat_map(|r| (0..scale.items.len()).map(move |i| (r, i)))
        .collect();
    let next = AtomicUsize::new(0);
    let run_aborted: Vec<AtomicBool> = (0..plan.runs).map(|_| AtomicBool::new(false)).collect();
    let session_aborted = AtomicBool::new(false);
    let root_rng = RngStream::new(plan.seed);
    let workers = endpoint.parallelism.min(tasks.len());

    let mut records: BTreeMap<usize, TranscriptRecord> = BTreeMap::new();
    let mut auth_status = None;
    let mut written = 0usize;
    let mut write_err = None;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<WorkerMsg>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (client, tasks, next, run_aborted, session_aborted, root_rng) =
                (&client, &tasks, &next, &run_aborted, &session_aborted, &root_rng);
            scope.spawn(move || loop {
                if session_aborted.load(Ordering::SeqCst) {
                    break;
                }
                let idx = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(run, item_idx)) = tasks.get(idx) else {
                    break;
                };
                let item = &scale.items[item_idx];
                let prompt = render_prompt_with(item, plan.condition, &plan.mitigation_text);
                let mut record = TranscriptRecord {
                    model: endpoint.model_name.clone(),
                    condition: plan.condition,
                    run_index: run,
                    item_id: item.id.clone(),
                    system_text: prompt.system_text.clone(),
                    prompt_text: prompt.user_text.clone(),
                    raw_completion: None,
                    parsed: ParsedOutcome::Failed {
                        reason: "run aborted after the endpoint became unreachable".into(),
                    },
                    timestamp: now(),
                    request_params: endpoint.request_params,
                    retry_count: 0,
                };
                if run_aborted[run as usize].load(Ordering::SeqCst) {
                    let _ = tx.send(WorkerMsg::Record(idx, Box::new(record)));
                    continue;
                }
                let mut messages = Vec::with_capacity(2);
                if !prompt.system_text.is_empty() {
                    messages.push(ChatMessage {
                        role: "system".into(),
                        content: prompt.system_text,
                    });
                }
                messages.push(ChatMessage {
                    role: "user".into(),
                    content: prompt.user_text,
                });
                let mut rng = root_rng.fork(idx as u64);
                loop {
                    match client.complete(&messages, &endpoint.request_params) {
                        Ok(text) => {
                            record.parsed = parse_response(&text, item);
                            record.raw_completion = Some(text);
                            break;
                        }
                        Err(CallError::Auth(status)) => {
                            session_aborted.store(true, Ordering::SeqCst);
                            let _ = tx.send(WorkerMsg::Auth(status));
                            return;
                        }
                        Err(e) if e.is_retryable() && record.retry_count < endpoint.max_retries => {
                            log::debug!("{}: {e}; retrying", item.id);
                            std::thread::sleep(backoff(endpoint.backoff_base_ms, record.retry_count, &mut rng));
                            record.retry_count += 1;
                        }
                        Err(e) => {
                            if e.is_retryable() {
                                run_aborted[run as usize].store(true, Ordering::SeqCst);
                            }
                            record.parsed = ParsedOutcome::Failed { reason: e.to_string() };
                            break;
                        }
                    }
                }
                record.timestamp = now();
                let _ = tx.send(WorkerMsg::Record(idx, Box::new(record)));
            });
        }
        drop(tx);

        // ordered sink: flush the contiguous prefix as it completes
        let mut pending: BTreeMap<usize, TranscriptRecord> = BTreeMap::new();
        for msg in rx {
            match msg {
                WorkerMsg::Auth(status) => auth_status = Some(status),
                WorkerMsg::Record(idx, rec) => {
                    pending.insert(idx, *rec);
                    while let Some(rec) = pending.remove(&written) {
                        if write_err.is_none() {
                            if let Err(e) = write_transcript(out, &rec) {
                                write_err = Some(e);
                            }
                        }
                        records.insert(written, rec);
                        written += 1;
                    }
                }
            }
        }
        // after an auth abort the prefix may have gaps
        for (idx, rec) in pending {
            if write_err.is_none() {
                if let Err(e) = write_transcript(out, &rec) {
                    write_err = Some(e);
                }
            }
            records.insert(idx, rec);
        }
    });

    if let Some(e) = write_err {
        return Err(e.into());
    }
    if let Some(status) = auth_status {
        return Err(AdminError::AuthFailure { status });
    }

    let mut summary = SessionSummary {
        transcripts: records.len(),
        ..Default::default()
    };
    let (mut correct, mut keyed) = (0usize, 0usize);
    let mut first_error = String::new();
    for rec in records.values() {
        summary.retries += rec.retry_count;
        match &rec.parsed {
            ParsedOutcome::Scored(s) => {
                summary.completed += 1;
                if let Some(c) = s.correct {
                    keyed += 1;
                    correct += usize::from(c);
                }
            }
            ParsedOutcome::Unparseable => summary.unparseable += 1,
            ParsedOutcome::Failed { reason } => {
                summary.failed += 1;
                if first_error.is_empty() {
                    first_error = reason.clone();
                }
            }
        }
    }
    if summary.unparseable > 0 {
        log::warn!("{} completion(s) could not be parsed", summary.unparseable);
    }
    summary.accuracy = (keyed > 0).then(|| round2(100.0 * correct as f64 / keyed as f64));
    summary.aborted_runs = run_aborted
        .iter()
        .enumerate()
        .filter(|(_, a)| a.load(Ordering::SeqCst))
        .map(|(r, _)| r as u32)
        .collect();
    if summary.completed + summary.unparseable == 0 && !summary.aborted_runs.is_empty() {
        return Err(AdminError::EndpointUnreachable {
            runs: summary.aborted_runs,
            last_error: first_error,
        });
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::read_transcripts;
    use crate::llm::mock::{MockBehavior, MockServer};
    use crate::llm::PromptCondition;
    use crate::scale::demo_scale;

    fn setup(behavior: MockBehavior) -> (MockServer, EndpointConfig, SessionPlan, ScaleDefinition) {
        let scale = demo_scale();
        let server = MockServer::start(&scale, behavior).unwrap();
        let mut ep = EndpointConfig::new(server.base_url(), "mock-model");
        ep.backoff_base_ms = 1;
        ep.timeout_secs = 5;
        let mut plan = SessionPlan::new(scale.reference(), PromptCondition::Baseline);
        plan.runs = 2;
        (server, ep, plan, scale)
    }

    #[test]
    fn echo_key_gives_full_accuracy_in_order() {
        let (_srv, ep, plan, scale) = setup(MockBehavior::EchoKey);
        let mut buf = Vec::new();
        let s = administer(&plan, &ep, &scale, &mut buf).unwrap();
        assert_eq!(s.transcripts, 40);
        assert_eq!(s.accuracy, Some(100.0));
        let recs = read_transcripts(&buf[..]).unwrap();
        let order: Vec<_> = recs.iter().map(|r| (r.run_index, r.item_id.clone())).collect();
        let expected: Vec<_> = (0..2)
            .flat_map(|r| scale.items.iter().map(move |i| (r, i.id.clone())))
            .collect();
        assert_eq!(order, expected);
    }

    #[test]
    fn garbage_is_unparseable_not_failed() {
        let (_srv, ep, plan, scale) = setup(MockBehavior::GarbageText);
        let s = administer(&plan, &ep, &scale, &mut Vec::new()).unwrap();
        assert_eq!(s.unparseable, 40);
        assert_eq!(s.accuracy, None);
    }

    #[test]
    fn unauthorized_aborts_session() {
        let (_srv, ep, plan, scale) = setup(MockBehavior::Unauthorized);
        let err = administer(&plan, &ep, &scale, &mut Vec::new()).unwrap_err();
        assert!(matches!(err, AdminError::AuthFailure { status: 401 }));
    }

    #[test]
    fn persistent_server_error_is_unreachable() {
        let (_srv, mut ep, plan, scale) = setup(MockBehavior::ServerError);
        ep.max_retries = 1;
        let err = administer(&plan, &ep, &scale, &mut Vec::new()).unwrap_err();
        assert!(matches!(err, AdminError::EndpointUnreachable { ref runs, .. } if runs == &[0, 1]));
    }

    #[test]
    fn mismatched_scale_is_rejected() {
        let (_srv, ep, mut plan, scale) = setup(MockBehavior::EchoKey);
        plan.scale_ref.version = "other".into();
        assert!(matches!(
            administer(&plan, &ep, &scale, &mut Vec::new()),
            Err(AdminError::InvalidConfig(_))
        ));
    }
}
