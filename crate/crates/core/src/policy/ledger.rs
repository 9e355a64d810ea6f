use std::collections::VecDeque;

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;

use crate::money::Usd;

/// Length of the trailing spend window.
pub const WINDOW: Duration = Duration::hours(24);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RecordId(u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpendRecord {
    pub id: RecordId,
    pub timestamp: DateTime<Utc>,
    pub host: String,
    pub amount_usd: Usd,
}

/// Spend records in insertion order.
#[derive(Debug, Default)]
pub struct SpendLedger {
    records: VecDeque<SpendRecord>,
    next_id: u64,
    newest: Option<DateTime<Utc>>,
}

fn in_window(ts: DateTime<Utc>, now: DateTime<Utc>) -> bool {
    ts > now - WINDOW && ts <= now
}

impl SpendLedger {
    /// Record an allowed payment. `host` should already be normalised.
    pub fn record(&mut self, amount: Usd, host: &str, now: DateTime<Utc>) -> RecordId {
        let id = RecordId(self.next_id);
        self.next_id += 1;
        self.records.push_back(SpendRecord { id, timestamp: now, host: host.to_string(), amount_usd: amount });
        let newest = self.newest.map_or(now, |n| n.max(now));
        self.newest = Some(newest);
        self.prune(newest);
        id
    }

    pub fn remove(&mut self, id: RecordId) -> bool {
        match self.records.iter().position(|r| r.id == id) {
            Some(i) => {
                self.records.remove(i);
                true
            }
            None => false,
        }
    }

    /// Drop records that can no longer fall inside any window ending at or
    /// after `newest`.
    fn prune(&mut self, newest: DateTime<Utc>) {
        self.records.retain(|r| r.timestamp > newest - WINDOW);
    }

    pub fn daily_aggregate(&self, now: DateTime<Utc>) -> Usd {
        self.records.iter().filter(|r| in_window(r.timestamp, now)).map(|r| r.amount_usd).sum()
    }

    pub fn host_aggregate(&self, host: &str, now: DateTime<Utc>) -> Usd {
        self.records.iter().filter(|r| r.host == host && in_window(r.timestamp, now)).map(|r| r.amount_usd).sum()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Lowercased host with port and trailing dot removed. Accepts a full URL or
/// a bare `host[:port]`.
pub fn normalise_host(input: &str) -> Option<String> {
    let input = input.trim();
    let host = if input.contains("://") {
        url::Url::parse(input).ok()?.host_str()?.to_string()
    } else {
        url::Url::parse(&format!("http://{input}")).ok()?.host_str()?.to_string()
    };
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    (!host.is_empty()).then_some(host)
}
