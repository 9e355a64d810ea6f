//! Client-side hardening for HTTP 402 micropayments.
//!
//! Every outbound payment passes four controls in a fixed order before any
//! token is signed or transmitted:
//!
//! 1. [`pii`]: detect and redact personal data in the metadata triple,
//! 2. [`policy`]: per-call, rolling-daily and per-endpoint spending limits,
//! 3. [`replay`]: HMAC fingerprint deduplication with a TTL,
//! 4. [`audit`]: one HMAC-chained JSON-L event per decision.
//!
//! [`client::HardenedClient`] wires them together behind the 402 negotiation.
//! [`testbed`] provides in-process mock servers and facilitator,
//! [`corpus`] generates the labeled evaluation corpus and [`eval`] scores the
//! detector against it.

pub mod audit;
pub mod client;
pub mod clock;
pub mod corpus;
pub mod eval;
pub mod money;
pub mod pii;
pub mod policy;
pub mod replay;
pub mod testbed;

pub use audit::{AuditEvent, AuditLog, ChainHead, Outcome, VerifyResult};
pub use client::{HardenedClient, MetadataTriple, PaymentSpec, PaymentToken, PipelineOutcome, Status};
pub use clock::{Clock, ManualClock, SystemClock};
pub use money::Usd;
pub use pii::{Detection, DetectorConfig, EntityType, Mode, PiiEngine, RedactionResult};
pub use policy::{PolicyConfig, PolicyDecision, PolicyEngine};
pub use replay::{Fingerprint, Freshness, ReplayGuard};
