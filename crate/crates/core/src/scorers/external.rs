//! Line-delimited JSON bridge to out-of-process scorers.
//!
//! The scorer speaks first with `{"score_range":[lo,hi]}`. Each request is
//! `{"id","question","title","prior","candidate"}`; each response is
//! `{"id","score"}` or `{"id","error"}`, one per request, in any order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::process::{Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ScoreRange, ScoreRecord};
use crate::error::{Error, Result};
use crate::instances::TrainingInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub score_range: ScoreRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    pub question: String,
    pub title: Option<String>,
    pub prior: Vec<String>,
    pub candidate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn parse_handshake(line: &str) -> Result<Handshake> {
    let h: Handshake = serde_json::from_str(line)
        .map_err(|e| Error::invalid(format!("bad scorer handshake: {e}")))?;
    if !(h.score_range.0 < h.score_range.1) || !h.score_range.0.is_finite() || !h.score_range.1.is_finite()
    {
        return Err(Error::invalid(format!(
            "scorer declared an empty range {:?}",
            h.score_range
        )));
    }
    Ok(h)
}

/// Parses a response line; exactly one of `score` / `error` must be present.
pub fn parse_response(line: &str) -> Result<ScoreResponse> {
    let r: ScoreResponse = serde_json::from_str(line)
        .map_err(|e| Error::invalid(format!("bad scorer response: {e}")))?;
    match (&r.score, &r.error) {
        (Some(_), None) | (None, Some(_)) => Ok(r),
        _ => Err(Error::invalid(format!(
            "response for `{}` must carry exactly one of score/error",
            r.id
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalEndpoint {
    /// Program and arguments; the protocol runs over its stdin/stdout.
    Command(Vec<String>),
    /// `host:port` of a TCP scorer.
    Tcp(String),
}

/// Outcome for one instance, in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExternalResult {
    Scored(ScoreRecord),
    Failed {
        qa_id: String,
        paragraph_index: usize,
        error: String,
    },
}

impl ExternalResult {
    pub fn record(&self) -> Option<&ScoreRecord> {
        match self {
            ExternalResult::Scored(r) => Some(r),
            ExternalResult::Failed { .. } => None,
        }
    }
}

/// Scores a batch through an endpoint. `idle_timeout` bounds the wait for
/// each line from the scorer.
pub fn external_score(
    instances: &[TrainingInstance],
    endpoint: &ExternalEndpoint,
    scorer_id: &str,
    idle_timeout: Duration,
) -> Result<Vec<ExternalResult>> {
    match endpoint {
        ExternalEndpoint::Command(argv) => {
            let (program, args) = argv
                .split_first()
                .ok_or_else(|| Error::Config("external scorer command is empty".into()))?;
            let mut child = Command::new(program)
                .args(args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(|e| Error::Plugin {
                    command: argv.join(" "),
                    detail: format!("spawn failed: {e}"),
                })?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            let result = run_session(stdout, stdin, instances, scorer_id, idle_timeout);
            let _ = child.kill();
            let _ = child.wait();
            result
        }
        ExternalEndpoint::Tcp(addr) => {
            let stream = TcpStream::connect(addr)
                .map_err(|e| Error::invalid(format!("cannot reach scorer at {addr}: {e}")))?;
            let reader = stream
                .try_clone()
                .map_err(|e| Error::invalid(format!("socket clone failed: {e}")))?;
            let result = run_session(reader, stream.try_clone().map_err(|e| Error::invalid(e.to_string()))?, instances, scorer_id, idle_timeout);
            let _ = stream.shutdown(std::net::Shutdown::Both);
            result
        }
    }
}

/// Runs the protocol over an arbitrary byte stream pair.
pub fn run_session<R, W>(
    reader: R,
    writer: W,
    instances: &[TrainingInstance],
    scorer_id: &str,
    idle_timeout: Duration,
) -> Result<Vec<ExternalResult>>
where
    R: Read + Send + 'static,
    W: Write,
{
    let (tx, rx) = mpsc::channel::<String>();
    thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let handshake_line = loop {
        match rx.recv_timeout(idle_timeout) {
            Ok(l) if l.trim().is_empty() => continue,
            Ok(l) => break l,
            Err(_) => return Err(Error::invalid("scorer sent no handshake")),
        }
    };
    let range = parse_handshake(&handshake_line)?.score_range;

    // Wire ids are instance keys, suffixed when a key repeats in the batch.
    let mut ids = Vec::with_capacity(instances.len());
    let mut slot_of: HashMap<String, usize> = HashMap::new();
    for (pos, inst) in instances.iter().enumerate() {
        let mut id = inst.key();
        if slot_of.contains_key(&id) {
            id = format!("{id}~{pos}");
        }
        slot_of.insert(id.clone(), pos);
        ids.push(id);
    }

    let mut outcomes: Vec<Option<ExternalResult>> = vec![None; instances.len()];
    let fail = |inst: &TrainingInstance, error: String| ExternalResult::Failed {
        qa_id: inst.qa_id.clone(),
        paragraph_index: inst.paragraph_index,
        error,
    };

    {
        let mut w = BufWriter::new(writer);
        for (inst, id) in instances.iter().zip(&ids) {
            let req = ScoreRequest {
                id: id.clone(),
                question: inst.question.clone(),
                title: inst.title.clone(),
                prior: inst.prior.clone(),
                candidate: inst.candidate.clone(),
            };
            let sent = serde_json::to_writer(&mut w, &req)
                .map_err(std::io::Error::from)
                .and_then(|_| w.write_all(b"\n"));
            if let Err(e) = sent {
                log::warn!("external scorer write failed: {e}");
                break;
            }
        }
        if let Err(e) = w.flush() {
            log::warn!("external scorer flush failed: {e}");
        }
    }

    let mut pending = instances.len();
    while pending > 0 {
        let line = match rx.recv_timeout(idle_timeout) {
            Ok(l) => l,
            Err(RecvTimeoutError::Timeout) => {
                log::warn!("external scorer timed out with {pending} responses outstanding");
                break;
            }
            Err(RecvTimeoutError::Disconnected) => break,
        };
        if line.trim().is_empty() {
            continue;
        }
        let resp = match parse_response(&line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{e}");
                continue;
            }
        };
        let Some(&slot) = slot_of.get(&resp.id) else {
            log::warn!("external scorer answered unknown id `{}`", resp.id);
            continue;
        };
        if outcomes[slot].is_some() {
            continue;
        }
        let inst = &instances[slot];
        outcomes[slot] = Some(match (resp.score, resp.error) {
            (Some(score), _) if score.is_finite() && range.contains(score) => {
                ExternalResult::Scored(ScoreRecord {
                    qa_id: inst.qa_id.clone(),
                    paragraph_index: inst.paragraph_index,
                    score,
                    scorer: scorer_id.to_string(),
                    score_range: range,
                })
            }
            (Some(score), _) => fail(
                inst,
                format!("score {score} outside declared range [{}, {}]", range.0, range.1),
            ),
            (None, Some(e)) => fail(inst, e),
            (None, None) => fail(inst, "empty response".into()),
        });
        pending -= 1;
    }

    Ok(outcomes
        .into_iter()
        .zip(instances)
        .map(|(o, inst)| o.unwrap_or_else(|| fail(inst, "no response from scorer".into())))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;

    fn inst(i: usize) -> TrainingInstance {
        TrainingInstance {
            qa_id: "qa".into(),
            paragraph_index: i,
            question: "why?".into(),
            title: None,
            prior: vec!["before".into()],
            candidate: format!("paragraph {i}"),
            label: 0,
            context_size: 4,
            truncated: false,
        }
    }

    /// TCP scorer answering each request with `answer(id)`, in reverse order.
    fn serve(range: &str, answer: fn(&str) -> Option<String>, expected: usize) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let range = range.to_string();
        thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut w = stream.try_clone().unwrap();
            writeln!(w, "{{\"score_range\":{range}}}").unwrap();
            let mut ids = Vec::new();
            for line in BufReader::new(stream).lines().take(expected) {
                let req: ScoreRequest = serde_json::from_str(&line.unwrap()).unwrap();
                ids.push(req.id);
            }
            for id in ids.iter().rev() {
                if let Some(l) = answer(id) {
                    writeln!(w, "{l}").unwrap();
                }
            }
            w.flush().unwrap();
            thread::sleep(Duration::from_millis(300));
        });
        addr
    }

    #[test]
    fn stub_scores_everything() {
        let addr = serve("[0,1]", |id| Some(format!("{{\"id\":\"{id}\",\"score\":0.5}}")), 3);
        let batch: Vec<_> = (0..3).map(inst).collect();
        let out = external_score(&batch, &ExternalEndpoint::Tcp(addr), "ext", Duration::from_secs(5)).unwrap();
        assert_eq!(out.len(), 3);
        for (o, i) in out.iter().zip(&batch) {
            let r = o.record().unwrap();
            assert_eq!(r.score, 0.5);
            assert_eq!(r.paragraph_index, i.paragraph_index);
        }
    }

    #[test]
    fn missing_id_is_flagged() {
        let addr = serve(
            "[-1,1]",
            |id| (!id.ends_with(":1")).then(|| format!("{{\"id\":\"{id}\",\"score\":-0.25}}")),
            3,
        );
        let batch: Vec<_> = (0..3).map(inst).collect();
        let out = external_score(&batch, &ExternalEndpoint::Tcp(addr), "ext", Duration::from_millis(200)).unwrap();
        assert!(out[0].record().is_some());
        assert!(matches!(out[1], ExternalResult::Failed { paragraph_index: 1, .. }));
        assert_eq!(out[2].record().unwrap().score_range, ScoreRange(-1.0, 1.0));
    }

    #[test]
    fn error_and_out_of_range_responses() {
        let addr = serve(
            "[0,1]",
            |id| {
                Some(if id.ends_with(":0") {
                    format!("{{\"id\":\"{id}\",\"error\":\"model crashed\"}}")
                } else if id.ends_with(":1") {
                    format!("{{\"id\":\"{id}\",\"score\":7.0}}")
                } else {
                    "garbage".to_string()
                })
            },
            3,
        );
        let batch: Vec<_> = (0..3).map(inst).collect();
        let out = external_score(&batch, &ExternalEndpoint::Tcp(addr), "ext", Duration::from_millis(200)).unwrap();
        assert!(matches!(&out[0], ExternalResult::Failed { error, .. } if error == "model crashed"));
        assert!(matches!(&out[1], ExternalResult::Failed { error, .. } if error.contains("outside")));
        assert!(matches!(&out[2], ExternalResult::Failed { .. }));
    }

    #[test]
    fn child_process_endpoint() {
        let script = r#"echo '{"score_range":[0,1]}'
while IFS= read -r l; do
  id=$(printf '%s' "$l" | sed 's/^{"id":"\([^"]*\)".*/\1/')
  printf '{"id":"%s","score":0.5}\n' "$id"
done"#;
        let ep = ExternalEndpoint::Command(vec!["sh".into(), "-c".into(), script.into()]);
        let batch: Vec<_> = (0..4).map(inst).collect();
        let out = external_score(&batch, &ep, "sh", Duration::from_secs(5)).unwrap();
        assert!(out.iter().all(|o| o.record().map(|r| r.score) == Some(0.5)));
    }

    #[test]
    fn duplicate_keys_get_distinct_ids() {
        let addr = serve("[0,1]", |id| Some(format!("{{\"id\":\"{id}\",\"score\":1}}")), 2);
        let batch = vec![inst(0), inst(0)];
        let out = external_score(&batch, &ExternalEndpoint::Tcp(addr), "ext", Duration::from_secs(5)).unwrap();
        assert!(out.iter().all(|o| o.record().is_some()));
    }

    #[test]
    fn protocol_line_parsing() {
        assert!(parse_handshake("{\"score_range\":[1,0]}").is_err());
        assert!(parse_handshake("{\"score_range\":[0,10]}").is_ok());
        assert!(parse_response("{\"id\":\"a\"}").is_err());
        assert!(parse_response("{\"id\":\"a\",\"score\":1,\"error\":\"x\"}").is_err());
        assert!(parse_response("{\"id\":\"a\",\"score\":0.1}").is_ok());
    }

    #[test]
    fn request_wire_shape() {
        let req = ScoreRequest {
            id: "a:0".into(),
            question: "q".into(),
            title: None,
            prior: vec![],
            candidate: "c".into(),
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":"a:0","question":"q","title":null,"prior":[],"candidate":"c"}"#
        );
    }
}
