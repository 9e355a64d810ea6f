//! Replay deduplication keyed by an HMAC-SHA256 fingerprint of the payment
//! token's pre-signature fields.
//!
//! The guard consults an optional external key-value store speaking
//! set-if-absent-with-expiry. Any external error falls back to the in-memory
//! store; the guard never answers `Fresh` without recording the fingerprint
//! somewhere. Fingerprints recorded only in memory during an outage are not
//! visible to other processes once the external store recovers.

mod memory;
mod resp;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, Duration, Utc};
use hmac::{Hmac, Mac};
use sha2::Sha256;

pub use memory::MemoryStore;
pub use resp::RespStore;

type HmacSha256 = Hmac<Sha256>;

/// Default dedup window, aligned with the daily spend window.
pub const DEFAULT_TTL: Duration = Duration::hours(24);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Freshness {
    Fresh,
    Duplicate,
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("fingerprint key must not be empty")]
    EmptyKey,
    #[error("ttl must be positive")]
    BadTtl,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("store protocol: {0}")]
    Protocol(String),
}

/// Atomic set-if-absent with expiry.
pub trait ReplayStore: Send + Sync {
    fn check_and_record(&self, fp: &Fingerprint, now: DateTime<Utc>, ttl: Duration) -> Result<Freshness, StoreError>;
}

/// Length-prefixed canonical form: for each field in the given order,
/// `u64be(len(name)) name u64be(len(value)) value`.
pub fn canonicalise<'a>(fields: impl IntoIterator<Item = (&'a str, &'a str)>) -> Vec<u8> {
    let mut out = Vec::new();
    for (name, value) in fields {
        for part in [name, value] {
            out.extend_from_slice(&(part.len() as u64).to_be_bytes());
            out.extend_from_slice(part.as_bytes());
        }
    }
    out
}

pub fn fingerprint<'a>(
    fields: impl IntoIterator<Item = (&'a str, &'a str)>,
    key: &[u8],
) -> Result<Fingerprint, ReplayError> {
    if key.is_empty() {
        return Err(ReplayError::EmptyKey);
    }
    let mut mac = HmacSha256::new_from_slice(key).expect("hmac accepts any key length");
    mac.update(&canonicalise(fields));
    Ok(Fingerprint(mac.finalize().into_bytes().into()))
}

pub struct ReplayGuard {
    key: Vec<u8>,
    ttl: Duration,
    memory: MemoryStore,
    external: Option<Box<dyn ReplayStore>>,
    fallbacks: AtomicU64,
}

impl fmt::Debug for ReplayGuard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReplayGuard")
            .field("ttl", &self.ttl)
            .field("external", &self.external.is_some())
            .field("fallbacks", &self.fallbacks.load(Ordering::Relaxed))
            .finish_non_exhaustive()
    }
}

impl ReplayGuard {
    pub fn new(key: impl Into<Vec<u8>>, ttl: Duration) -> Result<Self, ReplayError> {
        let key = key.into();
        if key.is_empty() {
            return Err(ReplayError::EmptyKey);
        }
        if ttl <= Duration::zero() {
            return Err(ReplayError::BadTtl);
        }
        Ok(ReplayGuard { key, ttl, memory: MemoryStore::default(), external: None, fallbacks: AtomicU64::new(0) })
    }

    pub fn with_external(mut self, store: Box<dyn ReplayStore>) -> Self {
        self.external = Some(store);
        self
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn fingerprint<'a>(&self, fields: impl IntoIterator<Item = (&'a str, &'a str)>) -> Fingerprint {
        fingerprint(fields, &self.key).expect("key checked at construction")
    }

    pub fn check_and_record(&self, fp: &Fingerprint, now: DateTime<Utc>) -> Freshness {
        let Some(external) = &self.external else {
            return self.memory.record(fp, now, self.ttl);
        };
        if self.memory.is_live(fp, now) {
            return Freshness::Duplicate;
        }
        match external.check_and_record(fp, now, self.ttl) {
            Ok(Freshness::Fresh) => {
                self.memory.record(fp, now, self.ttl);
                Freshness::Fresh
            }
            Ok(Freshness::Duplicate) => Freshness::Duplicate,
            Err(_) => {
                self.fallbacks.fetch_add(1, Ordering::Relaxed);
                self.memory.record(fp, now, self.ttl)
            }
        }
    }

    /// Number of decisions served by the in-memory store because the
    /// external store failed.
    pub fn fallback_count(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    pub fn sweep(&self, now: DateTime<Utc>) -> usize {
        self.memory.sweep(now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Barrier};

    fn t0() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2026-03-01T00:00:00Z").unwrap().with_timezone(&Utc)
    }

    fn token(amount: &str) -> Vec<(&'static str, String)> {
        vec![
            ("resource_url", "https://api.x.io/r".into()),
            ("description", "d".into()),
            ("reason", "r".into()),
            ("amount", amount.into()),
            ("payer_id", "agent-1".into()),
        ]
    }

    fn fp_of(fields: &[(&'static str, String)]) -> Fingerprint {
        fingerprint(fields.iter().map(|(k, v)| (*k, v.as_str())), b"k").unwrap()
    }

    #[test]
    fn deterministic() {
        assert_eq!(fp_of(&token("1.00")), fp_of(&token("1.00")));
    }

    #[test]
    fn amount_change_changes_fingerprint() {
        assert_ne!(fp_of(&token("1.00")), fp_of(&token("1.01")));
    }

    #[test]
    fn length_prefix_prevents_concatenation_collisions() {
        let a = [("a", "b"), ("c", "")];
        let b = [("a", ""), ("c", "b")];
        assert_ne!(canonicalise(a), canonicalise(b));
        assert_ne!(fingerprint(a, b"k").unwrap(), fingerprint(b, b"k").unwrap());
        // Concatenating the values alone would collide.
        let naive = |f: &[(&str, &str)]| f.iter().map(|(_, v)| *v).collect::<String>();
        assert_eq!(naive(&a), naive(&b));
    }

    #[test]
    fn key_matters_and_must_be_nonempty() {
        let f = [("a", "b")];
        assert_ne!(fingerprint(f, b"k1").unwrap(), fingerprint(f, b"k2").unwrap());
        assert!(matches!(fingerprint(f, b""), Err(ReplayError::EmptyKey)));
        assert!(matches!(ReplayGuard::new(Vec::new(), DEFAULT_TTL), Err(ReplayError::EmptyKey)));
    }

    #[test]
    fn immediate_replay_is_duplicate() {
        let g = ReplayGuard::new(b"k".to_vec(), DEFAULT_TTL).unwrap();
        let fp = fp_of(&token("1.00"));
        assert_eq!(g.check_and_record(&fp, t0()), Freshness::Fresh);
        assert_eq!(g.check_and_record(&fp, t0()), Freshness::Duplicate);
    }

    #[test]
    fn expired_entry_is_fresh_again() {
        let ttl = Duration::seconds(60);
        let g = ReplayGuard::new(b"k".to_vec(), ttl).unwrap();
        let fp = fp_of(&token("1.00"));
        assert_eq!(g.check_and_record(&fp, t0()), Freshness::Fresh);
        assert_eq!(g.check_and_record(&fp, t0() + ttl - Duration::seconds(1)), Freshness::Duplicate);
        assert_eq!(g.check_and_record(&fp, t0() + ttl + Duration::seconds(1)), Freshness::Fresh);
    }

    #[test]
    fn thousand_distinct_tokens_are_fresh() {
        let g = ReplayGuard::new(b"k".to_vec(), DEFAULT_TTL).unwrap();
        let fresh = (0..1000)
            .filter(|i| g.check_and_record(&fp_of(&token(&format!("{i}.00"))), t0()) == Freshness::Fresh)
            .count();
        assert_eq!(fresh, 1000);
    }

    struct FailingStore;

    impl ReplayStore for FailingStore {
        fn check_and_record(&self, _: &Fingerprint, _: DateTime<Utc>, _: Duration) -> Result<Freshness, StoreError> {
            Err(StoreError::Protocol("down".into()))
        }
    }

    #[test]
    fn external_failure_falls_back_to_memory() {
        let g = ReplayGuard::new(b"k".to_vec(), DEFAULT_TTL).unwrap().with_external(Box::new(FailingStore));
        let fp = fp_of(&token("1.00"));
        assert_eq!(g.check_and_record(&fp, t0()), Freshness::Fresh);
        assert_eq!(g.check_and_record(&fp, t0()), Freshness::Duplicate);
        assert_eq!(g.fallback_count(), 1);
    }

    #[test]
    fn concurrent_submitters_get_one_fresh() {
        let g = Arc::new(ReplayGuard::new(b"k".to_vec(), DEFAULT_TTL).unwrap());
        let fp = fp_of(&token("1.00"));
        let barrier = Arc::new(Barrier::new(32));
        let handles: Vec<_> = (0..32)
            .map(|_| {
                let (g, barrier) = (Arc::clone(&g), Arc::clone(&barrier));
                std::thread::spawn(move || {
                    barrier.wait();
                    g.check_and_record(&fp, t0())
                })
            })
            .collect();
        let fresh = handles.into_iter().map(|h| h.join().unwrap()).filter(|f| *f == Freshness::Fresh).count();
        assert_eq!(fresh, 1);
    }
}
