//! The hardened 402 payment client.

mod signer;
mod transport;
mod types;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use base64::Engine as _;
use chrono::{DateTime, Utc};

use crate::audit::{AuditLog, EventFields, Outcome};
use crate::clock::{Clock, SystemClock};
use crate::money::Usd;
use crate::pii::{redact, resolve_overlaps, EntityType, PiiAnalyzer, PiiEngine};
use crate::policy::{PolicyEngine, RecordId};
use crate::replay::{Fingerprint, Freshness, ReplayGuard};

pub use signer::{HmacSigner, SignError, Signer};
pub use transport::{HttpRequest, HttpResponse, HttpTransport, Method, TransportError, UreqTransport};
pub use types::{MetadataTriple, PaymentSpec, PaymentToken, PipelineOutcome, SpecError, Status};

pub const PAYMENT_HEADER: &str = "X-Payment";

/// How many times one `request` may pay before giving up on a server that
/// keeps answering 402.
pub const MAX_PAYMENT_ATTEMPTS: usize = 2;

/// Audit `resource_url` used when the URL could not be scanned.
pub const UNSCANNED_URL: &str = "<UNSCANNED>";

/// Free-text metadata the calling agent attaches to its payments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgentContext {
    pub description: String,
    pub reason: String,
}

impl AgentContext {
    pub fn new(description: impl Into<String>, reason: impl Into<String>) -> Self {
        AgentContext { description: description.into(), reason: reason.into() }
    }
}

/// What the caller gets back. `payment` is `None` when no 402 was involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: Vec<u8>,
    pub payment: Option<PipelineOutcome>,
}

/// Metadata that passed every control and may be signed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cleared {
    pub triple: MetadataTriple,
    pub redactions: usize,
    pub fingerprint: Option<Fingerprint>,
    reservation: Option<RecordId>,
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("invalid detector configuration: {0}")]
    Detector(#[from] crate::pii::ConfigError),
}

struct Filtered {
    triple: MetadataTriple,
    fields_redacted: usize,
    entities: BTreeSet<EntityType>,
}

#[derive(Default)]
pub struct HardenedClientBuilder {
    agent_id: Option<String>,
    payer_id: Option<String>,
    analyzer: Option<Arc<dyn PiiAnalyzer>>,
    pii_filter: bool,
    policy: Option<Arc<PolicyEngine>>,
    replay: Option<Arc<ReplayGuard>>,
    replay_guard: bool,
    audit: Option<Arc<AuditLog>>,
    signer: Option<Arc<dyn Signer>>,
    transport: Option<Arc<dyn HttpTransport>>,
    clock: Option<Arc<dyn Clock>>,
}

impl HardenedClientBuilder {
    pub fn agent_id(mut self, id: impl Into<String>) -> Self {
        self.agent_id = Some(id.into());
        self
    }

    pub fn payer_id(mut self, id: impl Into<String>) -> Self {
        self.payer_id = Some(id.into());
        self
    }

    /// Defaults to a [`PiiEngine`] with the recommended configuration.
    pub fn analyzer(mut self, analyzer: Arc<dyn PiiAnalyzer>) -> Self {
        self.analyzer = Some(analyzer);
        self
    }

    /// Send metadata unscanned. For positive-control experiments only.
    pub fn without_pii_filter(mut self) -> Self {
        self.pii_filter = false;
        self
    }

    pub fn policy(mut self, policy: Arc<PolicyEngine>) -> Self {
        self.policy = Some(policy);
        self
    }

    pub fn replay_guard(mut self, guard: Arc<ReplayGuard>) -> Self {
        self.replay = Some(guard);
        self
    }

    /// Skip deduplication. For positive-control experiments only.
    pub fn without_replay_guard(mut self) -> Self {
        self.replay_guard = false;
        self
    }

    pub fn audit(mut self, log: Arc<AuditLog>) -> Self {
        self.audit = Some(log);
        self
    }

    pub fn signer(mut self, signer: Arc<dyn Signer>) -> Self {
        self.signer = Some(signer);
        self
    }

    pub fn transport(mut self, transport: Arc<dyn HttpTransport>) -> Self {
        self.transport = Some(transport);
        self
    }

    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn build(self) -> Result<HardenedClient, BuildError> {
        let analyzer = match (self.pii_filter, self.analyzer) {
            (false, _) => None,
            (true, Some(a)) => Some(a),
            (true, None) => {
                Some(Arc::new(PiiEngine::new(crate::pii::DetectorConfig::recommended())?) as Arc<dyn PiiAnalyzer>)
            }
        };
        let replay = match (self.replay_guard, self.replay) {
            (false, _) => None,
            (true, Some(r)) => Some(r),
            (true, None) => return Err(BuildError::Missing("replay guard")),
        };
        Ok(HardenedClient {
            agent_id: self.agent_id.unwrap_or_else(|| "agent".into()),
            payer_id: self.payer_id.unwrap_or_else(|| "payer".into()),
            analyzer,
            policy: self.policy.ok_or(BuildError::Missing("policy engine"))?,
            replay,
            audit: self.audit.ok_or(BuildError::Missing("audit log"))?,
            signer: self.signer.ok_or(BuildError::Missing("signer"))?,
            transport: self.transport.ok_or(BuildError::Missing("transport"))?,
            clock: self.clock.unwrap_or_else(|| Arc::new(SystemClock)),
        })
    }
}

/// Drop-in payment client: `request` behaves like a plain HTTP GET that
/// transparently settles 402 challenges through the four controls.
pub struct HardenedClient {
    agent_id: String,
    payer_id: String,
    analyzer: Option<Arc<dyn PiiAnalyzer>>,
    policy: Arc<PolicyEngine>,
    replay: Option<Arc<ReplayGuard>>,
    audit: Arc<AuditLog>,
    signer: Arc<dyn Signer>,
    transport: Arc<dyn HttpTransport>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for HardenedClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HardenedClient")
            .field("agent_id", &self.agent_id)
            .field("pii_filter", &self.analyzer.is_some())
            .field("replay_guard", &self.replay.is_some())
            .finish_non_exhaustive()
    }
}

impl HardenedClient {
    pub fn builder() -> HardenedClientBuilder {
        HardenedClientBuilder { pii_filter: true, replay_guard: true, ..Default::default() }
    }

    pub fn audit_log(&self) -> &Arc<AuditLog> {
        &self.audit
    }

    pub fn policy(&self) -> &Arc<PolicyEngine> {
        &self.policy
    }

    pub fn request(&self, url: &str, context: &AgentContext) -> Result<Response, TransportError> {
        let mut response = self.transport.send(&HttpRequest::get(url))?;
        if response.status != 402 {
            return Ok(Response { status: response.status, body: response.body, payment: None });
        }
        let mut last_paid = None;
        for _ in 0..MAX_PAYMENT_ATTEMPTS {
            let outcome = self.pay(url, context, &response.body);
            let Some(receipt) = outcome.receipt.clone().filter(|_| outcome.status == Status::Paid) else {
                return Ok(Response { status: 402, body: Vec::new(), payment: Some(outcome) });
            };
            let retry = HttpRequest::get(url)
                .header(PAYMENT_HEADER, base64::engine::general_purpose::STANDARD.encode(&receipt));
            match self.transport.send(&retry) {
                Ok(r) if r.status == 402 => {
                    response = r;
                    last_paid = Some(outcome);
                }
                Ok(r) => return Ok(Response { status: r.status, body: r.body, payment: Some(outcome) }),
                Err(_) => {
                    self.emit_error(url, "stage=retry; transport failure");
                    let failed = PipelineOutcome { status: Status::Error, ..outcome };
                    return Ok(Response { status: 0, body: Vec::new(), payment: Some(failed) });
                }
            }
        }
        self.emit_error(url, "stage=retry; server still demands payment");
        let redactions = last_paid.as_ref().map_or(0, |o| o.redactions);
        let receipt = last_paid.and_then(|o| o.receipt);
        Ok(Response {
            status: 402,
            body: response.body,
            payment: Some(PipelineOutcome { status: Status::Error, receipt, redactions }),
        })
    }

    /// Handle one 402 body: controls, signing, settlement.
    fn pay(&self, url: &str, context: &AgentContext, body: &[u8]) -> PipelineOutcome {
        let spec = match PaymentSpec::parse(body) {
            Ok(spec) => spec,
            Err(_) => {
                self.emit_error(url, "stage=negotiate; malformed 402 body");
                return PipelineOutcome::blocked(Status::Error, 0);
            }
        };
        let triple = MetadataTriple {
            resource_url: url.to_string(),
            description: join(&context.description, spec.description.as_deref()),
            reason: join(&context.reason, spec.reason.as_deref()),
        };
        let now = self.clock.now();
        let cleared = match self.intercept(&triple, spec.price_usd, url, &spec.network, now) {
            Ok(c) => c,
            Err(outcome) => return outcome,
        };
        let redacted_url = cleared.triple.resource_url.clone();
        let fail = |detail: &str, release: bool| {
            if release {
                self.release(cleared.reservation);
            }
            self.emit(&redacted_url, Outcome::Error, detail.to_string());
            PipelineOutcome::blocked(Status::Error, cleared.redactions)
        };

        let signing = PaymentToken::signing_bytes(&cleared.triple, spec.price_usd, &self.payer_id, &spec.network);
        let Ok(signature) = self.signer.sign(&signing) else {
            return fail("stage=sign; signer failure", true);
        };
        let token = PaymentToken {
            metadata: cleared.triple.clone(),
            amount_usd: spec.price_usd,
            payer_id: self.payer_id.clone(),
            network: spec.network.clone(),
            signature,
        };
        match self.transport.send(&HttpRequest::post(&spec.facilitator_address, token.to_bytes())) {
            Ok(r) if (200..300).contains(&r.status) => {
                PipelineOutcome { status: Status::Paid, receipt: Some(r.body), redactions: cleared.redactions }
            }
            Ok(r) => fail(&format!("stage=settle; facilitator rejected with {}", r.status), true),
            // The facilitator may have settled; keep the spend recorded.
            Err(_) => fail("stage=settle; transport failure", false),
        }
    }

    /// Run PII filter, policy, replay guard and audit, in that order, on
    /// one outbound payment. Exactly one audit event is emitted.
    pub fn intercept(
        &self,
        triple: &MetadataTriple,
        amount: Usd,
        host: &str,
        network: &str,
        now: DateTime<Utc>,
    ) -> Result<Cleared, PipelineOutcome> {
        let Ok(filtered) = self.filter(triple) else {
            self.emit_at(now, UNSCANNED_URL, Outcome::Error, "stage=pii; analyzer failure".into());
            return Err(PipelineOutcome::blocked(Status::BlockedPiiError, 0));
        };
        let redactions = filtered.fields_redacted;
        let redacted_note = (!filtered.entities.is_empty()).then(|| {
            let names: Vec<&str> = filtered.entities.iter().map(|e| e.as_str()).collect();
            format!("redacted={}", names.join(","))
        });
        let with_note = |detail: String| match &redacted_note {
            Some(note) if detail.is_empty() => note.clone(),
            Some(note) => format!("{detail}; {note}"),
            None => detail,
        };
        let url = filtered.triple.resource_url.clone();

        let reservation = match self.policy.check_and_record(amount, host, now) {
            Err(_) => {
                self.emit_at(now, &url, Outcome::Error, with_note("stage=policy; invalid amount or host".into()));
                return Err(PipelineOutcome::blocked(Status::Error, redactions));
            }
            Ok((decision, None)) => {
                let dimension = decision.violated_dimension.map_or("UNKNOWN", |d| d.as_str());
                let detail =
                    format!("dimension={dimension}; amount={amount}; aggregate={}", decision.current_aggregate_usd);
                self.emit_at(now, &url, Outcome::PolicyBlocked, with_note(detail));
                return Err(PipelineOutcome::blocked(Status::BlockedPolicy, redactions));
            }
            Ok((_, Some(id))) => id,
        };

        let fingerprint = self.replay.as_ref().map(|guard| {
            let amount = amount.to_string();
            let fields = filtered.triple.fields();
            let fp = guard.fingerprint(fields.into_iter().chain([
                ("amount_usd", amount.as_str()),
                ("payer_id", &self.payer_id),
                ("network", network),
            ]));
            (guard, fp)
        });
        if let Some((guard, fp)) = &fingerprint {
            if guard.check_and_record(fp, now) == Freshness::Duplicate {
                self.policy.release(reservation);
                self.emit_at(now, &url, Outcome::ReplayBlocked, with_note("duplicate payment".into()));
                return Err(PipelineOutcome::blocked(Status::BlockedReplay, redactions));
            }
        }

        let outcome = if redactions > 0 { Outcome::PiiRedacted } else { Outcome::Allowed };
        if !self.emit_at(now, &url, outcome, with_note(String::new())) {
            self.policy.release(reservation);
            return Err(PipelineOutcome::blocked(Status::Error, redactions));
        }
        Ok(Cleared {
            triple: filtered.triple,
            redactions,
            fingerprint: fingerprint.map(|(_, fp)| fp),
            reservation: Some(reservation),
        })
    }

    fn filter(&self, triple: &MetadataTriple) -> Result<Filtered, ()> {
        let Some(analyzer) = &self.analyzer else {
            return Ok(Filtered { triple: triple.clone(), fields_redacted: 0, entities: BTreeSet::new() });
        };
        let mut out = Filtered { triple: MetadataTriple::default(), fields_redacted: 0, entities: BTreeSet::new() };
        for (name, text) in triple.fields() {
            let redacted = scrub(analyzer.as_ref(), text, &mut out.entities)?;
            if redacted != text {
                out.fields_redacted += 1;
            }
            match name {
                "resource_url" => out.triple.resource_url = redacted,
                "description" => out.triple.description = redacted,
                _ => out.triple.reason = redacted,
            }
        }
        Ok(out)
    }

    fn release(&self, reservation: Option<RecordId>) {
        if let Some(id) = reservation {
            self.policy.release(id);
        }
    }

    /// Audit an error that happened outside `intercept`; the URL is scanned
    /// again so the log never holds what the filter would remove.
    fn emit_error(&self, url: &str, detail: &str) {
        let url = match &self.analyzer {
            None => url.to_string(),
            Some(a) => scrub(a.as_ref(), url, &mut BTreeSet::new()).unwrap_or_else(|_| UNSCANNED_URL.to_string()),
        };
        self.emit(&url, Outcome::Error, detail.to_string());
    }

    fn emit(&self, url: &str, outcome: Outcome, detail: String) -> bool {
        self.emit_at(self.clock.now(), url, outcome, detail)
    }

    fn emit_at(&self, ts: DateTime<Utc>, url: &str, outcome: Outcome, detail: String) -> bool {
        let fields =
            EventFields { ts, agent_id: self.agent_id.clone(), resource_url: url.to_string(), outcome, detail };
        self.audit.append(fields).is_ok()
    }
}

/// Analyze and redact one field. Panics inside the analyzer count as failure.
fn scrub(analyzer: &dyn PiiAnalyzer, text: &str, seen: &mut BTreeSet<EntityType>) -> Result<String, ()> {
    let detections = catch_unwind(AssertUnwindSafe(|| analyzer.analyze(text))).map_err(|_| ())?.map_err(|_| ())?;
    let detections = resolve_overlaps(detections);
    let result = redact(text, &detections).map_err(|_| ())?;
    seen.extend(result.detections_applied.iter().map(|d| d.entity_type));
    Ok(result.redacted_text)
}

fn join(own: &str, suggested: Option<&str>) -> String {
    match suggested.filter(|s| !s.is_empty()) {
        None => own.to_string(),
        Some(s) if own.is_empty() => s.to_string(),
        Some(s) => format!("{own} {s}"),
    }
}
