use std::collections::HashMap;
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};

use super::{Fingerprint, Freshness, ReplayStore, StoreError};

/// Inserts between opportunistic full sweeps.
const SWEEP_EVERY: usize = 4096;

#[derive(Debug, Default)]
struct Inner {
    // fingerprint -> expiry instant
    entries: HashMap<Fingerprint, DateTime<Utc>>,
    inserts_since_sweep: usize,
}

/// Process-local TTL store. Expired entries are ignored on access and evicted
/// lazily, plus a periodic sweep.
#[derive(Debug, Default)]
pub struct MemoryStore {
    inner: Mutex<Inner>,
}

impl MemoryStore {
    pub fn record(&self, fp: &Fingerprint, now: DateTime<Utc>, ttl: Duration) -> Freshness {
        let mut inner = self.inner.lock().unwrap();
        if inner.entries.get(fp).is_some_and(|expiry| now < *expiry) {
            return Freshness::Duplicate;
        }
        inner.entries.insert(*fp, now + ttl);
        inner.inserts_since_sweep += 1;
        if inner.inserts_since_sweep >= SWEEP_EVERY {
            inner.entries.retain(|_, expiry| now < *expiry);
            inner.inserts_since_sweep = 0;
        }
        Freshness::Fresh
    }

    pub fn is_live(&self, fp: &Fingerprint, now: DateTime<Utc>) -> bool {
        self.inner.lock().unwrap().entries.get(fp).is_some_and(|expiry| now < *expiry)
    }

    pub fn sweep(&self, now: DateTime<Utc>) -> usize {
        let mut inner = self.inner.lock().unwrap();
        let before = inner.entries.len();
        inner.entries.retain(|_, expiry| now < *expiry);
        inner.inserts_since_sweep = 0;
        before - inner.entries.len()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ReplayStore for MemoryStore {
    fn check_and_record(&self, fp: &Fingerprint, now: DateTime<Utc>, ttl: Duration) -> Result<Freshness, StoreError> {
        Ok(self.record(fp, now, ttl))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_evicts_only_expired() {
        let store = MemoryStore::default();
        let t0 = DateTime::parse_from_rfc3339("2026-03-01T00:00:00Z").unwrap().with_timezone(&Utc);
        store.record(&Fingerprint([1; 32]), t0, Duration::seconds(10));
        store.record(&Fingerprint([2; 32]), t0, Duration::seconds(100));
        assert_eq!(store.sweep(t0 + Duration::seconds(10)), 1);
        assert_eq!(store.len(), 1);
        assert!(store.is_live(&Fingerprint([2; 32]), t0 + Duration::seconds(10)));
    }
}
