//! Declarative spending limits over a rolling 24-hour ledger.
//!
//! Windows are half-open: a record counts at `now` iff
//! `now - 24h < record.timestamp <= now`. The per-endpoint limit uses the same
//! window as the daily limit.

mod ledger;

use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::money::Usd;
pub use ledger::{normalise_host, RecordId, SpendLedger, SpendRecord, WINDOW};

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("payment amount must be positive, got {0}")]
    NonPositiveAmount(Usd),
    #[error("limit {name} must not be negative, got {value}")]
    NegativeLimit { name: &'static str, value: Usd },
    #[error("cannot determine host from {0:?}")]
    BadHost(String),
    #[error("reading policy file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing policy file: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub max_per_call_usd: Usd,
    pub daily_limit_usd: Usd,
    pub max_per_endpoint_usd: Usd,
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        for (name, value) in [
            ("max_per_call_usd", self.max_per_call_usd),
            ("daily_limit_usd", self.daily_limit_usd),
            ("max_per_endpoint_usd", self.max_per_endpoint_usd),
        ] {
            if value < Usd::ZERO {
                return Err(PolicyError::NegativeLimit { name, value });
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let config: PolicyConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Dimension {
    PerCall,
    Daily,
    PerEndpoint,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::PerCall => "PER_CALL",
            Dimension::Daily => "DAILY",
            Dimension::PerEndpoint => "PER_ENDPOINT",
        }
    }
}

/// `current_aggregate_usd` is the in-window total (before this payment) for
/// the host when the per-endpoint limit tripped, otherwise the daily total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PolicyDecision {
    pub allowed: bool,
    pub violated_dimension: Option<Dimension>,
    pub current_aggregate_usd: Usd,
}

impl PolicyDecision {
    fn allow(aggregate: Usd) -> Self {
        PolicyDecision { allowed: true, violated_dimension: None, current_aggregate_usd: aggregate }
    }

    fn deny(dimension: Dimension, aggregate: Usd) -> Self {
        PolicyDecision { allowed: false, violated_dimension: Some(dimension), current_aggregate_usd: aggregate }
    }
}

/// Pure check of one payment against `config` and `ledger`.
pub fn check(
    amount: Usd,
    host: &str,
    now: DateTime<Utc>,
    config: &PolicyConfig,
    ledger: &SpendLedger,
) -> Result<PolicyDecision, PolicyError> {
    if !amount.is_positive() {
        return Err(PolicyError::NonPositiveAmount(amount));
    }
    let daily = ledger.daily_aggregate(now);
    if amount > config.max_per_call_usd {
        return Ok(PolicyDecision::deny(Dimension::PerCall, daily));
    }
    if daily + amount > config.daily_limit_usd {
        return Ok(PolicyDecision::deny(Dimension::Daily, daily));
    }
    let per_host = ledger.host_aggregate(host, now);
    if per_host + amount > config.max_per_endpoint_usd {
        return Ok(PolicyDecision::deny(Dimension::PerEndpoint, per_host));
    }
    Ok(PolicyDecision::allow(daily))
}

/// The single spending authority for a client: check and record happen under
/// one lock, so concurrent payments cannot jointly overshoot a limit.
#[derive(Debug)]
pub struct PolicyEngine {
    config: PolicyConfig,
    ledger: Mutex<SpendLedger>,
}

impl PolicyEngine {
    pub fn new(config: PolicyConfig) -> Result<Self, PolicyError> {
        config.validate()?;
        Ok(PolicyEngine { config, ledger: Mutex::new(SpendLedger::default()) })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    /// Atomically check and, if allowed, record. Returns the record id of an
    /// allowed payment so it can be released if a later control blocks.
    pub fn check_and_record(
        &self,
        amount: Usd,
        host: &str,
        now: DateTime<Utc>,
    ) -> Result<(PolicyDecision, Option<RecordId>), PolicyError> {
        let host = normalise_host(host).ok_or_else(|| PolicyError::BadHost(host.to_string()))?;
        let mut ledger = self.ledger.lock().unwrap();
        let decision = check(amount, &host, now, &self.config, &ledger)?;
        let id = decision.allowed.then(|| ledger.record(amount, &host, now));
        Ok((decision, id))
    }

    /// Undo a recorded payment that never left the client.
    pub fn release(&self, id: RecordId) -> bool {
        self.ledger.lock().unwrap().remove(id)
    }

    pub fn daily_aggregate(&self, now: DateTime<Utc>) -> Usd {
        self.ledger.lock().unwrap().daily_aggregate(now)
    }

    pub fn host_aggregate(&self, host: &str, now: DateTime<Utc>) -> Usd {
        let host = normalise_host(host).unwrap_or_default();
        self.ledger.lock().unwrap().host_aggregate(&host, now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;
    use std::sync::Arc;

    fn t0() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2026-03-01T12:00:00Z").unwrap().with_timezone(&Utc)
    }

    fn usd(s: &str) -> Usd {
        s.parse().unwrap()
    }

    fn config(per_call: &str, daily: &str, endpoint: &str) -> PolicyConfig {
        PolicyConfig {
            max_per_call_usd: usd(per_call),
            daily_limit_usd: usd(daily),
            max_per_endpoint_usd: usd(endpoint),
        }
    }

    #[test]
    fn per_call_breach() {
        let d = check(usd("10.00"), "api.x.io", t0(), &config("5", "100", "50"), &SpendLedger::default()).unwrap();
        assert!(!d.allowed);
        assert_eq!(d.violated_dimension, Some(Dimension::PerCall));
    }

    #[test]
    fn slack_limits_allow() {
        let d = check(usd("1.00"), "api.x.io", t0(), &config("5", "100", "50"), &SpendLedger::default()).unwrap();
        assert!(d.allowed);
        assert_eq!(d.violated_dimension, None);
    }

    #[test]
    fn daily_breach_after_hundred_records() {
        let mut ledger = SpendLedger::default();
        for i in 0..100 {
            ledger.record(usd("1.00"), &format!("h{i}.example"), t0() - Duration::minutes(i));
        }
        assert_eq!(ledger.daily_aggregate(t0()), usd("100.00"));
        let d = check(usd("1.00"), "api.x.io", t0(), &config("5", "100", "50"), &ledger).unwrap();
        assert_eq!(d.violated_dimension, Some(Dimension::Daily));
        assert_eq!(d.current_aggregate_usd, usd("100"));
    }

    #[test]
    fn per_endpoint_breach_is_host_scoped() {
        let mut ledger = SpendLedger::default();
        ledger.record(usd("4.50"), "api.x.io", t0());
        let cfg = config("5", "100", "5");
        let d = check(usd("1.00"), "api.x.io", t0(), &cfg, &ledger).unwrap();
        assert_eq!(d.violated_dimension, Some(Dimension::PerEndpoint));
        assert_eq!(d.current_aggregate_usd, usd("4.50"));
        assert!(check(usd("1.00"), "other.io", t0(), &cfg, &ledger).unwrap().allowed);
    }

    #[test]
    fn first_violation_order_is_per_call_daily_endpoint() {
        let mut ledger = SpendLedger::default();
        ledger.record(usd("10"), "api.x.io", t0());
        let d = check(usd("20"), "api.x.io", t0(), &config("5", "10", "10"), &ledger).unwrap();
        assert_eq!(d.violated_dimension, Some(Dimension::PerCall));
        let d = check(usd("1"), "api.x.io", t0(), &config("5", "10", "10"), &ledger).unwrap();
        assert_eq!(d.violated_dimension, Some(Dimension::Daily));
    }

    #[test]
    fn zero_limit_blocks_everything() {
        let d = check(usd("0.000001"), "a.io", t0(), &config("0", "100", "100"), &SpendLedger::default()).unwrap();
        assert_eq!(d.violated_dimension, Some(Dimension::PerCall));
    }

    #[test]
    fn nonpositive_amount_is_an_input_error() {
        let ledger = SpendLedger::default();
        assert!(matches!(
            check(Usd::ZERO, "a.io", t0(), &config("5", "5", "5"), &ledger),
            Err(PolicyError::NonPositiveAmount(_))
        ));
        assert!(check(usd("-1"), "a.io", t0(), &config("5", "5", "5"), &ledger).is_err());
    }

    #[test]
    fn denied_check_records_nothing() {
        let engine = PolicyEngine::new(config("5", "100", "50")).unwrap();
        let (d, id) = engine.check_and_record(usd("10"), "api.x.io", t0()).unwrap();
        assert!(!d.allowed && id.is_none());
        assert_eq!(engine.daily_aggregate(t0()), Usd::ZERO);
    }

    #[test]
    fn release_undoes_a_record() {
        let engine = PolicyEngine::new(config("5", "100", "50")).unwrap();
        let (_, id) = engine.check_and_record(usd("2"), "https://API.x.io:8443/r", t0()).unwrap();
        assert_eq!(engine.host_aggregate("api.x.io", t0()), usd("2"));
        assert!(engine.release(id.unwrap()));
        assert_eq!(engine.daily_aggregate(t0()), Usd::ZERO);
    }

    #[test]
    fn config_file_keys_are_exact() {
        let cfg = PolicyConfig::from_json(
            r#"{"max_per_call_usd": 1.0, "daily_limit_usd": "25.50", "max_per_endpoint_usd": 10}"#,
        )
        .unwrap();
        assert_eq!(cfg, config("1", "25.5", "10"));
        assert!(
            PolicyConfig::from_json(r#"{"max_per_call": 1, "daily_limit_usd": 1, "max_per_endpoint_usd": 1}"#).is_err()
        );
        assert!(matches!(
            PolicyConfig::from_json(r#"{"max_per_call_usd": -1, "daily_limit_usd": 1, "max_per_endpoint_usd": 1}"#),
            Err(PolicyError::NegativeLimit { .. })
        ));
    }

    #[test]
    fn concurrent_payments_never_overshoot_daily_limit() {
        let engine = Arc::new(PolicyEngine::new(config("1", "10", "10")).unwrap());
        let handles: Vec<_> = (0..32)
            .map(|_| {
                let engine = Arc::clone(&engine);
                std::thread::spawn(move || {
                    (0..10)
                        .filter(|_| engine.check_and_record(usd("0.10"), "api.x.io", t0()).unwrap().0.allowed)
                        .count()
                })
            })
            .collect();
        let allowed: usize = handles.into_iter().map(|h| h.join().unwrap()).sum();
        assert_eq!(allowed, 100);
        assert_eq!(engine.daily_aggregate(t0()), usd("10"));
    }
}
