//! Tamper-evident audit trail.
//!
//! One JSON line per control decision. Each line carries
//! `chain_mac = HMAC-SHA256(key, previous_mac || canonical_json)` where the
//! canonical JSON is the event without `chain_mac`, fields in the order
//! `ts, agent_id, resource_url, outcome, detail, seq`, no whitespace. The
//! genesis `previous_mac` is 32 zero bytes.
//!
//! A chain alone cannot reveal truncation of its tail, so sinks also keep a
//! keyed [`ChainHead`] (`<log>.head` for file sinks) naming the expected
//! length and final MAC.

mod sink;

use std::fmt;
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

pub use sink::{AuditSink, FileSink, MemorySink};

type HmacSha256 = Hmac<Sha256>;

const HEAD_DOMAIN: &[u8] = b"x402-guard/audit-head/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Allowed,
    PiiRedacted,
    PolicyBlocked,
    ReplayBlocked,
    Error,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Allowed => "ALLOWED",
            Outcome::PiiRedacted => "PII_REDACTED",
            Outcome::PolicyBlocked => "POLICY_BLOCKED",
            Outcome::ReplayBlocked => "REPLAY_BLOCKED",
            Outcome::Error => "ERROR",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One serialised log line. `resource_url` is always post-redaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditEvent {
    pub ts: String,
    pub agent_id: String,
    pub resource_url: String,
    pub outcome: Outcome,
    pub detail: String,
    pub seq: u64,
    pub chain_mac: String,
}

#[derive(Serialize)]
struct MacInput<'a> {
    ts: &'a str,
    agent_id: &'a str,
    resource_url: &'a str,
    outcome: Outcome,
    detail: &'a str,
    seq: u64,
}

impl AuditEvent {
    fn mac_input(&self) -> MacInput<'_> {
        MacInput {
            ts: &self.ts,
            agent_id: &self.agent_id,
            resource_url: &self.resource_url,
            outcome: self.outcome,
            detail: &self.detail,
            seq: self.seq,
        }
    }

    /// The exact JSON line (without newline) written to the log.
    pub fn to_line(&self) -> Result<String, AuditError> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Caller-supplied part of an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFields {
    pub ts: DateTime<Utc>,
    pub agent_id: String,
    pub resource_url: String,
    pub outcome: Outcome,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainState {
    pub last_mac: [u8; 32],
    pub next_seq: u64,
}

impl ChainState {
    pub const GENESIS: ChainState = ChainState { last_mac: [0; 32], next_seq: 0 };
}

impl Default for ChainState {
    fn default() -> Self {
        Self::GENESIS
    }
}

/// Keyed summary of a chain's tail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainHead {
    pub next_seq: u64,
    pub last_mac: String,
    pub head_mac: String,
}

impl ChainHead {
    pub fn new(state: &ChainState, key: &[u8]) -> Result<Self, AuditError> {
        Ok(ChainHead {
            next_seq: state.next_seq,
            last_mac: hex::encode(state.last_mac),
            head_mac: hex::encode(head_mac(state.next_seq, &state.last_mac, key)?),
        })
    }

    fn authentic(&self, key: &[u8]) -> bool {
        let Ok(last) = hex::decode(&self.last_mac) else { return false };
        let Ok(stored) = hex::decode(&self.head_mac) else { return false };
        let Ok(mut mac) = HmacSha256::new_from_slice(key) else { return false };
        mac.update(HEAD_DOMAIN);
        mac.update(&self.next_seq.to_be_bytes());
        mac.update(&last);
        mac.verify_slice(&stored).is_ok()
    }
}

fn head_mac(next_seq: u64, last_mac: &[u8; 32], key: &[u8]) -> Result<[u8; 32], AuditError> {
    let mut mac = keyed(key)?;
    mac.update(HEAD_DOMAIN);
    mac.update(&next_seq.to_be_bytes());
    mac.update(last_mac);
    Ok(mac.finalize().into_bytes().into())
}

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("audit key must not be empty")]
    EmptyKey,
    #[error("serialising audit event: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("writing audit event: {0}")]
    Io(#[from] std::io::Error),
}

fn keyed(key: &[u8]) -> Result<HmacSha256, AuditError> {
    if key.is_empty() {
        return Err(AuditError::EmptyKey);
    }
    Ok(HmacSha256::new_from_slice(key).expect("hmac accepts any key length"))
}

fn chain_mac(prev: &[u8; 32], event: &AuditEvent, key: &[u8]) -> Result<[u8; 32], AuditError> {
    let mut mac = keyed(key)?;
    mac.update(prev);
    mac.update(&serde_json::to_vec(&event.mac_input())?);
    Ok(mac.finalize().into_bytes().into())
}

pub fn format_ts(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Build the next event and the advanced state. Pure; nothing is written.
pub fn append(fields: EventFields, state: &ChainState, key: &[u8]) -> Result<(AuditEvent, ChainState), AuditError> {
    let mut event = AuditEvent {
        ts: format_ts(fields.ts),
        agent_id: fields.agent_id,
        resource_url: fields.resource_url,
        outcome: fields.outcome,
        detail: fields.detail,
        seq: state.next_seq,
        chain_mac: String::new(),
    };
    let mac = chain_mac(&state.last_mac, &event, key)?;
    event.chain_mac = hex::encode(mac);
    Ok((event, ChainState { last_mac: mac, next_seq: state.next_seq + 1 }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyResult {
    Ok { events: u64 },
    Tampered { seq: u64 },
}

impl fmt::Display for VerifyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyResult::Ok { .. } => f.write_str("OK"),
            VerifyResult::Tampered { seq } => write!(f, "TAMPERED at seq {seq}"),
        }
    }
}

/// Recompute the chain from genesis. Reports the first line position whose
/// content, sequence number or MAC is wrong. With `head`, also detects a
/// truncated or extended tail.
pub fn verify_chain(log: &[u8], key: &[u8], head: Option<&ChainHead>) -> VerifyResult {
    let mut lines: Vec<&[u8]> = log.split(|b| *b == b'\n').collect();
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    let mut prev = [0u8; 32];
    for (pos, raw) in lines.iter().enumerate() {
        let pos = pos as u64;
        let tampered = VerifyResult::Tampered { seq: pos };
        let Ok(line) = std::str::from_utf8(raw) else { return tampered };
        let Ok(event) = serde_json::from_str::<AuditEvent>(line) else { return tampered };
        if event.seq != pos || event.to_line().ok().as_deref() != Some(line) {
            return tampered;
        }
        let Ok(expected) = chain_mac(&prev, &event, key) else { return tampered };
        if hex::encode(expected) != event.chain_mac {
            return tampered;
        }
        prev = expected;
    }
    let count = lines.len() as u64;
    if let Some(head) = head {
        if !head.authentic(key) {
            return VerifyResult::Tampered { seq: count.min(head.next_seq) };
        }
        if head.next_seq != count {
            return VerifyResult::Tampered { seq: count.min(head.next_seq) };
        }
        if head.last_mac != hex::encode(prev) {
            return VerifyResult::Tampered { seq: count.saturating_sub(1) };
        }
    }
    VerifyResult::Ok { events: count }
}

/// A serialised, append-only audit stream.
pub struct AuditLog {
    key: Vec<u8>,
    inner: Mutex<(ChainState, Box<dyn AuditSink>)>,
}

impl fmt::Debug for AuditLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AuditLog").field("state", &self.inner.lock().unwrap().0).finish_non_exhaustive()
    }
}

impl AuditLog {
    pub fn new(key: impl Into<Vec<u8>>, sink: Box<dyn AuditSink>) -> Result<Self, AuditError> {
        Self::resume(key, sink, ChainState::GENESIS)
    }

    /// Continue an existing chain from `state`.
    pub fn resume(key: impl Into<Vec<u8>>, sink: Box<dyn AuditSink>, state: ChainState) -> Result<Self, AuditError> {
        let key = key.into();
        if key.is_empty() {
            return Err(AuditError::EmptyKey);
        }
        Ok(AuditLog { key, inner: Mutex::new((state, sink)) })
    }

    /// Append and persist one event. The chain only advances once the sink
    /// has accepted the line.
    pub fn append(&self, fields: EventFields) -> Result<AuditEvent, AuditError> {
        let mut guard = self.inner.lock().unwrap();
        let (state, sink) = &mut *guard;
        let (event, next) = append(fields, state, &self.key)?;
        let line = event.to_line()?;
        let head = ChainHead::new(&next, &self.key)?;
        sink.write_event(&line, &head)?;
        *state = next;
        Ok(event)
    }

    pub fn state(&self) -> ChainState {
        self.inner.lock().unwrap().0
    }

    pub fn head(&self) -> Result<ChainHead, AuditError> {
        ChainHead::new(&self.state(), &self.key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEY: &[u8] = b"audit-key";

    fn fields(i: usize) -> EventFields {
        EventFields {
            ts: DateTime::parse_from_rfc3339("2026-03-01T12:00:00.123Z").unwrap().with_timezone(&Utc)
                + chrono::Duration::seconds(i as i64),
            agent_id: "agent-7".into(),
            resource_url: format!("https://api.x.io/r/{i}"),
            outcome: Outcome::Allowed,
            detail: format!("event {i}"),
        }
    }

    fn build(n: usize) -> (Vec<u8>, ChainHead) {
        let sink = MemorySink::default();
        let log = AuditLog::new(KEY, Box::new(sink.clone())).unwrap();
        for i in 0..n {
            log.append(fields(i)).unwrap();
        }
        (sink.contents(), log.head().unwrap())
    }

    fn lines(log: &[u8]) -> Vec<Vec<u8>> {
        log.split(|b| *b == b'\n').filter(|l| !l.is_empty()).map(<[u8]>::to_vec).collect()
    }

    fn join(lines: &[Vec<u8>]) -> Vec<u8> {
        lines.iter().flat_map(|l| l.iter().copied().chain(*b"\n")).collect()
    }

    #[test]
    fn genesis_event() {
        let (event, state) = append(fields(0), &ChainState::GENESIS, KEY).unwrap();
        assert_eq!(event.seq, 0);
        assert_eq!(state.next_seq, 1);
        let mut mac = HmacSha256::new_from_slice(KEY).unwrap();
        mac.update(&[0u8; 32]);
        mac.update(&serde_json::to_vec(&event.mac_input()).unwrap());
        assert_eq!(event.chain_mac, hex::encode(mac.finalize().into_bytes()));
    }

    #[test]
    fn canonical_field_order_and_timestamp() {
        let (event, _) = append(fields(0), &ChainState::GENESIS, KEY).unwrap();
        let line = event.to_line().unwrap();
        assert!(line.starts_with(
            r#"{"ts":"2026-03-01T12:00:00.123Z","agent_id":"agent-7","resource_url":"https://api.x.io/r/0","outcome":"ALLOWED","detail":"event 0","seq":0,"chain_mac":""#
        ));
        assert!(event.chain_mac.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
    }

    #[test]
    fn identical_payloads_get_different_macs() {
        let (a, s1) = append(fields(0), &ChainState::GENESIS, KEY).unwrap();
        let mut f = fields(0);
        f.ts = fields(0).ts;
        let (b, _) = append(f, &s1, KEY).unwrap();
        assert_eq!(b.seq, 1);
        assert_ne!(a.chain_mac, b.chain_mac);
    }

    #[test]
    fn untampered_log_verifies() {
        let (log, head) = build(100);
        assert_eq!(verify_chain(&log, KEY, Some(&head)), VerifyResult::Ok { events: 100 });
        assert_eq!(verify_chain(&log, KEY, None), VerifyResult::Ok { events: 100 });
        assert_eq!(verify_chain(b"", KEY, None), VerifyResult::Ok { events: 0 });
    }

    #[test]
    fn wrong_key_fails_at_zero() {
        let (log, _) = build(3);
        assert_eq!(verify_chain(&log, b"other", None), VerifyResult::Tampered { seq: 0 });
    }

    #[test]
    fn byte_flip_in_detail_is_located() {
        let (log, head) = build(100);
        let mut ls = lines(&log);
        let line = String::from_utf8(ls[42].clone()).unwrap();
        let at = line.find("event 42").unwrap();
        ls[42][at] ^= 0x01;
        assert_eq!(verify_chain(&join(&ls), KEY, Some(&head)), VerifyResult::Tampered { seq: 42 });
    }

    #[test]
    fn deletion_is_located() {
        let (log, head) = build(100);
        let mut ls = lines(&log);
        ls.remove(10);
        assert_eq!(verify_chain(&join(&ls), KEY, Some(&head)), VerifyResult::Tampered { seq: 10 });
    }

    #[test]
    fn tail_truncation_needs_the_head() {
        let (log, head) = build(10);
        let mut ls = lines(&log);
        ls.pop();
        assert_eq!(verify_chain(&join(&ls), KEY, None), VerifyResult::Ok { events: 9 });
        assert_eq!(verify_chain(&join(&ls), KEY, Some(&head)), VerifyResult::Tampered { seq: 9 });
    }

    #[test]
    fn forged_head_is_rejected() {
        let (log, mut head) = build(10);
        head.next_seq = 11;
        assert_eq!(verify_chain(&log, KEY, Some(&head)), VerifyResult::Tampered { seq: 10 });
    }

    #[test]
    fn reordered_and_non_canonical_lines_fail() {
        let (log, _) = build(5);
        let mut ls = lines(&log);
        ls.swap(2, 3);
        assert_eq!(verify_chain(&join(&ls), KEY, None), VerifyResult::Tampered { seq: 2 });
        let mut ls = lines(&log);
        ls[1] = String::from_utf8(ls[1].clone()).unwrap().replace(",\"seq\"", ", \"seq\"").into_bytes();
        assert_eq!(verify_chain(&join(&ls), KEY, None), VerifyResult::Tampered { seq: 1 });
    }

    #[test]
    fn empty_key_rejected() {
        assert!(matches!(AuditLog::new(Vec::new(), Box::new(MemorySink::default())), Err(AuditError::EmptyKey)));
        assert!(matches!(append(fields(0), &ChainState::GENESIS, b""), Err(AuditError::EmptyKey)));
    }

    #[test]
    fn verify_result_display() {
        assert_eq!(VerifyResult::Ok { events: 1 }.to_string(), "OK");
        assert_eq!(VerifyResult::Tampered { seq: 7 }.to_string(), "TAMPERED at seq 7");
    }
}
