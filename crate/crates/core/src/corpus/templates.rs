//! Category-specific text the entities are embedded in.

use super::Category;
use crate::pii::EntityType;

pub struct Templates {
    pub hosts: &'static [&'static str],
    pub paths: &'static [&'static str],
    pub descriptions: &'static [&'static str],
    pub reasons: &'static [&'static str],
}

/// Trailing path segment for URLs without an injected entity.
pub const CLEAN_SEGMENTS: &[&str] =
    &["latest", "batch-7", "page-2", "summary", "q3-report", "item-4821", "v2", "export"];

/// Optional segment after an injected path entity.
pub const TAIL_SEGMENTS: &[&str] = &["", "", "/export", "/history", "/summary"];

pub fn templates(category: Category) -> Templates {
    match category {
        Category::AiInference => Templates {
            hosts: &["api.inferhub.io", "llm.gateway.dev", "models.tensorpay.ai"],
            paths: &["/v1/chat/completions", "/v1/embeddings", "/v1/images/generate", "/v2/models/summarise"],
            descriptions: &[
                "Chat completion for support ticket triage",
                "Embedding batch for semantic search",
                "Summarise the quarterly planning draft",
                "Image generation for a product banner",
                "Classify inbound feedback messages",
            ],
            reasons: &[
                "agent task step 3 of 5",
                "user asked for a shorter answer",
                "retry after model timeout",
                "scheduled nightly digest",
            ],
        },
        Category::DataAccess => Templates {
            hosts: &["data.marketfeed.io", "api.datavault.net", "records.openlookup.org"],
            paths: &["/v1/datasets/equities", "/v1/lookup", "/v2/records", "/v1/profiles", "/v1/exports/csv"],
            descriptions: &[
                "Historical price series download",
                "Company registry lookup",
                "Customer profile enrichment",
                "Bulk export of account records",
                "Address verification query",
            ],
            reasons: &[
                "portfolio rebalance check",
                "compliance screening run",
                "refresh cached dataset",
                "agent research subtask",
            ],
        },
        Category::Medical => Templates {
            hosts: &["api.medrecords.io", "fhir.clinicbridge.net", "labs.healthsync.org"],
            paths: &["/patient", "/v1/records", "/fhir/observation", "/v1/prescriptions", "/v1/appointments"],
            descriptions: &[
                "Export medical records",
                "Fetch latest lab results",
                "Prescription history request",
                "Appointment availability check",
                "Discharge summary retrieval",
            ],
            reasons: &[
                "care coordination",
                "referral paperwork",
                "insurance pre-authorisation",
                "follow-up scheduling",
            ],
        },
        Category::Compute => Templates {
            hosts: &["run.gpucloud.dev", "jobs.batchgrid.io", "api.edgecompute.net"],
            paths: &["/v1/jobs", "/v1/instances/a100", "/v2/functions/invoke", "/v1/queues/render"],
            descriptions: &[
                "Batch inference job on shared cluster",
                "Render queue slot for video frames",
                "Serverless function invocation",
                "Hourly compute lease",
            ],
            reasons: &[
                "pipeline stage rerun",
                "burst capacity for deadline",
                "scheduled training checkpoint",
                "load test warmup",
            ],
        },
        Category::Media => Templates {
            hosts: &["cdn.streamvault.tv", "api.stockmedia.io", "content.newswire.pub"],
            paths: &["/v1/articles", "/v1/images/licensed", "/v1/tracks/stream", "/v2/videos/clip"],
            descriptions: &[
                "Single article unlock",
                "Licensed stock photo download",
                "Music track streaming pass",
                "Short video clip licence",
            ],
            reasons: &["newsletter illustration", "background research", "social post asset", "weekly briefing source"],
        },
        Category::Financial => Templates {
            hosts: &["api.payrails.io", "fx.ledgerlink.net", "settle.bankbridge.eu"],
            paths: &["/v1/transfers", "/v1/accounts/verify", "/v1/payouts", "/v2/fx/quote"],
            descriptions: &[
                "Outbound transfer fee",
                "Account ownership verification",
                "Payout batch processing",
                "Foreign exchange quote",
            ],
            reasons: &[
                "supplier invoice settlement",
                "monthly reconciliation",
                "refund processing",
                "treasury rebalance",
            ],
        },
        Category::Generic => Templates {
            hosts: &["api.example.com", "service.tools.dev", "gateway.microapi.io"],
            paths: &["/v1/resource", "/v1/items", "/v1/query", "/v1/content"],
            descriptions: &["Paid API call", "Premium endpoint access", "Single resource fetch", "Metered query"],
            reasons: &["agent tool call", "user request", "cache miss", "background sync"],
        },
    }
}

/// Words that introduce an entity inside free text.
pub fn lead_ins(entity: EntityType) -> &'static [&'static str] {
    match entity {
        EntityType::Person => &["for", "on behalf of", "requested by", "prepared for"],
        EntityType::EmailAddress => &["send receipt to", "notify", "contact", "billing contact"],
        EntityType::PhoneNumber => &["callback", "sms to", "contact number"],
        EntityType::UsSsn => &["member ssn", "ssn", "identity check ssn"],
        EntityType::CreditCard => &["charge card", "card on file", "billing card"],
        EntityType::IbanCode => &["payout to", "settle to iban", "refund account"],
    }
}
