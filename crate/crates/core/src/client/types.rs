use std::fmt;

use serde::{Deserialize, Serialize};

use crate::money::Usd;

/// The three free-form fields an agent attaches to a payment. These are the
/// only fields the PII filter scans.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetadataTriple {
    pub resource_url: String,
    pub description: String,
    pub reason: String,
}

impl MetadataTriple {
    pub fn new(resource_url: impl Into<String>, description: impl Into<String>, reason: impl Into<String>) -> Self {
        MetadataTriple { resource_url: resource_url.into(), description: description.into(), reason: reason.into() }
    }

    pub(crate) fn fields(&self) -> [(&'static str, &str); 3] {
        [("resource_url", &self.resource_url), ("description", &self.description), ("reason", &self.reason)]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("402 body is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("price must be positive")]
    NonPositivePrice,
    #[error("no accepted payment schemes")]
    NoSchemes,
    #[error("missing facilitator")]
    NoFacilitator,
}

/// Body of a 402 response.
///
/// `description` and `reason` are optional server-suggested metadata. An
/// agent that follows them copies the text into its own triple, which is how a
/// hostile server tries to get PII into the payment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentSpec {
    pub price_usd: Usd,
    pub network: String,
    #[serde(rename = "facilitator")]
    pub facilitator_address: String,
    #[serde(rename = "schemes")]
    pub accepted_schemes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl PaymentSpec {
    pub fn parse(body: &[u8]) -> Result<Self, SpecError> {
        let spec: PaymentSpec = serde_json::from_slice(body)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !self.price_usd.is_positive() {
            return Err(SpecError::NonPositivePrice);
        }
        if self.accepted_schemes.is_empty() {
            return Err(SpecError::NoSchemes);
        }
        if self.facilitator_address.trim().is_empty() {
            return Err(SpecError::NoFacilitator);
        }
        Ok(())
    }

    pub fn to_body(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("spec serialises")
    }
}

#[derive(Serialize)]
struct Unsigned<'a> {
    metadata: &'a MetadataTriple,
    amount_usd: Usd,
    payer_id: &'a str,
    network: &'a str,
}

/// A signed payment. Only redacted metadata is ever placed here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaymentToken {
    pub metadata: MetadataTriple,
    pub amount_usd: Usd,
    pub payer_id: String,
    pub network: String,
    #[serde(with = "hex_bytes")]
    pub signature: Vec<u8>,
}

impl PaymentToken {
    /// The bytes a signer covers: every field except the signature.
    pub fn signing_bytes(metadata: &MetadataTriple, amount_usd: Usd, payer_id: &str, network: &str) -> Vec<u8> {
        serde_json::to_vec(&Unsigned { metadata, amount_usd, payer_id, network }).expect("token serialises")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("token serialises")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        hex::decode(text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Paid,
    BlockedPiiError,
    BlockedPolicy,
    BlockedReplay,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Paid => "PAID",
            Status::BlockedPiiError => "BLOCKED_PII_ERROR",
            Status::BlockedPolicy => "BLOCKED_POLICY",
            Status::BlockedReplay => "BLOCKED_REPLAY",
            Status::Error => "ERROR",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of one payment attempt. `redactions` counts metadata fields that
/// the filter changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineOutcome {
    pub status: Status,
    pub receipt: Option<Vec<u8>>,
    pub redactions: usize,
}

impl PipelineOutcome {
    pub(crate) fn blocked(status: Status, redactions: usize) -> Self {
        PipelineOutcome { status, receipt: None, redactions }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_wire_format() {
        let body =
            br#"{"price_usd":"0.01","network":"base-sepolia","facilitator":"http://f/settle","schemes":["exact"]}"#;
        let spec = PaymentSpec::parse(body).unwrap();
        assert_eq!(spec.price_usd, Usd::from_cents(1));
        assert_eq!(spec.accepted_schemes, vec!["exact"]);
        assert_eq!(spec.to_body(), body.to_vec());
        assert!(PaymentSpec::parse(br#"{"price_usd":0.5,"network":"n","facilitator":"f","schemes":["x"]}"#).is_ok());
    }

    #[test]
    fn malformed_specs_rejected() {
        for body in [
            &b"not json"[..],
            br#"{"price_usd":"0","network":"n","facilitator":"f","schemes":["x"]}"#,
            br#"{"price_usd":"-1","network":"n","facilitator":"f","schemes":["x"]}"#,
            br#"{"price_usd":"1","network":"n","facilitator":"f","schemes":[]}"#,
            br#"{"price_usd":"1","network":"n","facilitator":" ","schemes":["x"]}"#,
            br#"{"price_usd":"1","network":"n","schemes":["x"]}"#,
        ] {
            assert!(PaymentSpec::parse(body).is_err(), "{}", String::from_utf8_lossy(body));
        }
    }

    #[test]
    fn token_round_trip() {
        let token = PaymentToken {
            metadata: MetadataTriple::new("https://a/b", "d", "r"),
            amount_usd: Usd::from_cents(1),
            payer_id: "payer".into(),
            network: "net".into(),
            signature: vec![0xde, 0xad],
        };
        let bytes = token.to_bytes();
        assert!(String::from_utf8(bytes.clone()).unwrap().ends_with(r#""signature":"dead"}"#));
        assert_eq!(PaymentToken::from_bytes(&bytes).unwrap(), token);
        assert!(PaymentToken::from_bytes(b"{}").is_err());
    }
}
