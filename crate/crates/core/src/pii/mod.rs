//! PII detection and typed-placeholder redaction.
//!
//! Two modes: [`Mode::Pattern`] runs only structural recognisers (e-mail,
//! delimited US phone, SSN, card, IBAN). [`Mode::Contextual`] runs those plus
//! the context-sensitive recognisers (person names, compact international
//! phone numbers). All offsets in [`Detection`] are character offsets.

pub mod checksum;
pub mod lexicon;
pub mod recognisers;
mod redact;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use checksum::{iban_valid, luhn_valid, ChecksumError};
pub use recognisers::{RawMatch, Recogniser};
pub use redact::{redact, resolve_overlaps, RedactionResult, SpanError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityType {
    EmailAddress,
    Person,
    PhoneNumber,
    UsSsn,
    CreditCard,
    IbanCode,
}

impl EntityType {
    pub const ALL: [EntityType; 6] = [
        EntityType::EmailAddress,
        EntityType::Person,
        EntityType::PhoneNumber,
        EntityType::UsSsn,
        EntityType::CreditCard,
        EntityType::IbanCode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::EmailAddress => "EMAIL_ADDRESS",
            EntityType::Person => "PERSON",
            EntityType::PhoneNumber => "PHONE_NUMBER",
            EntityType::UsSsn => "US_SSN",
            EntityType::CreditCard => "CREDIT_CARD",
            EntityType::IbanCode => "IBAN_CODE",
        }
    }

    /// The literal redaction placeholder, e.g. `<EMAIL_ADDRESS>`.
    pub fn placeholder(self) -> String {
        format!("<{}>", self.as_str())
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityType::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConfigError::UnknownEntity(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pattern,
    Contextual,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Pattern => "pattern",
            Mode::Contextual => "contextual",
        })
    }
}

/// One detected span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub entity_type: EntityType,
    pub start: usize,
    pub end: usize,
    pub score: f64,
    pub recogniser_id: String,
}

impl Detection {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Detection) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("entity set must not be empty")]
    NoEntities,
    #[error("min_score {0} outside [0, 1]")]
    MinScore(f64),
    #[error("unknown entity type {0:?}")]
    UnknownEntity(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub mode: Mode,
    pub entities: BTreeSet<EntityType>,
    pub min_score: f64,
}

impl DetectorConfig {
    pub fn new(
        mode: Mode,
        entities: impl IntoIterator<Item = EntityType>,
        min_score: f64,
    ) -> Result<Self, ConfigError> {
        let config = DetectorConfig { mode, entities: entities.into_iter().collect(), min_score };
        config.validate()?;
        Ok(config)
    }

    /// Contextual mode, all entity types, `min_score = 0.4`.
    pub fn recommended() -> Self {
        DetectorConfig { mode: Mode::Contextual, entities: EntityType::ALL.into(), min_score: 0.4 }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.entities.is_empty() {
            return Err(ConfigError::NoEntities);
        }
        if !(0.0..=1.0).contains(&self.min_score) {
            return Err(ConfigError::MinScore(self.min_score));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PiiError {
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error("analyzer failure: {0}")]
    Analyzer(String),
}

/// Anything that can scan one metadata field. The payment pipeline treats an
/// `Err` as a reason to block.
pub trait PiiAnalyzer: Send + Sync {
    fn analyze(&self, text: &str) -> Result<Vec<Detection>, PiiError>;
}

/// A configured, immutable detector.
pub struct PiiEngine {
    config: DetectorConfig,
    recognisers: Vec<Box<dyn Recogniser>>,
}

impl fmt::Debug for PiiEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiiEngine")
            .field("config", &self.config)
            .field("recognisers", &self.recognisers.iter().map(|r| r.id()).collect::<Vec<_>>())
            .finish()
    }
}

impl PiiEngine {
    pub fn new(config: DetectorConfig) -> Result<Self, ConfigError> {
        Self::with_contextual(config, recognisers::contextual_recognisers())
    }

    /// Swap in a different set of contextual recognisers. They are ignored in
    /// pattern mode.
    pub fn with_contextual(config: DetectorConfig, contextual: Vec<Box<dyn Recogniser>>) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut all = recognisers::pattern_recognisers();
        if config.mode == Mode::Contextual {
            all.extend(contextual);
        }
        all.retain(|r| config.entities.contains(&r.entity()));
        Ok(PiiEngine { config, recognisers: all })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// All detections at or above `min_score`, sorted by start offset, with
    /// overlapping same-type spans merged.
    pub fn analyze(&self, text: &str) -> Vec<Detection> {
        if text.is_empty() {
            return Vec::new();
        }
        let offsets = CharOffsets::new(text);
        let mut raw: Vec<Detection> = self
            .recognisers
            .iter()
            .flat_map(|r| {
                let offsets = &offsets;
                r.scan(text).into_iter().map(move |m| Detection {
                    entity_type: r.entity(),
                    start: offsets.char_of(m.start),
                    end: offsets.char_of(m.end),
                    score: m.score,
                    recogniser_id: r.id().to_string(),
                })
            })
            .filter(|d| !d.is_empty())
            .collect();
        raw.sort_by_key(|a| (a.entity_type, a.start, a.end));

        let mut merged = merge_same_type(raw);
        merged.retain(|d| d.score >= self.config.min_score);
        merged.sort_by_key(|a| (a.start, a.end, a.entity_type));
        merged
    }

    /// Analyze, drop cross-type overlaps and redact.
    pub fn redact_text(&self, text: &str) -> RedactionResult {
        let detections = resolve_overlaps(self.analyze(text));
        redact(text, &detections).expect("engine spans are in bounds and disjoint")
    }
}

impl PiiAnalyzer for PiiEngine {
    fn analyze(&self, text: &str) -> Result<Vec<Detection>, PiiError> {
        Ok(PiiEngine::analyze(self, text))
    }
}

/// Input sorted by (entity, start). Transitively overlapping spans of one type
/// collapse to the widest member (ties: higher score, then earlier start)
/// carrying the cluster's maximum score.
fn merge_same_type(sorted: Vec<Detection>) -> Vec<Detection> {
    let mut out: Vec<Detection> = Vec::with_capacity(sorted.len());
    let mut cluster: Vec<Detection> = Vec::new();
    let mut cluster_end = 0;
    let flush = |cluster: &mut Vec<Detection>, out: &mut Vec<Detection>| {
        if cluster.is_empty() {
            return;
        }
        let max_score = cluster.iter().map(|d| d.score).fold(f64::MIN, f64::max);
        let mut best = cluster
            .drain(..)
            .min_by(|a, b| b.len().cmp(&a.len()).then(b.score.total_cmp(&a.score)).then(a.start.cmp(&b.start)))
            .expect("non-empty");
        best.score = max_score;
        out.push(best);
    };
    for d in sorted {
        let joins = cluster.last().is_some_and(|last| last.entity_type == d.entity_type && d.start < cluster_end);
        if !joins {
            flush(&mut cluster, &mut out);
            cluster_end = 0;
        }
        cluster_end = cluster_end.max(d.end);
        cluster.push(d);
    }
    flush(&mut cluster, &mut out);
    out
}

/// Byte-to-character offset translation.
struct CharOffsets {
    // None for pure ASCII, where the two coincide.
    table: Option<Vec<usize>>,
}

impl CharOffsets {
    fn new(text: &str) -> Self {
        if text.is_ascii() {
            return CharOffsets { table: None };
        }
        let mut table = vec![0; text.len() + 1];
        let mut chars = 0;
        for (byte, _) in text.char_indices() {
            table[byte] = chars;
            chars += 1;
        }
        table[text.len()] = chars;
        CharOffsets { table: Some(table) }
    }

    fn char_of(&self, byte: usize) -> usize {
        match &self.table {
            None => byte,
            Some(t) => t[byte],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn engine(mode: Mode, min_score: f64) -> PiiEngine {
        PiiEngine::new(DetectorConfig::new(mode, EntityType::ALL, min_score).unwrap()).unwrap()
    }

    fn surfaces(text: &str, dets: &[Detection]) -> Vec<(EntityType, String)> {
        let chars: Vec<char> = text.chars().collect();
        dets.iter().map(|d| (d.entity_type, chars[d.start..d.end].iter().collect())).collect()
    }

    #[test]
    fn listing_reason_field() {
        let text = "user=alice.martin@corp.io; ref=312-45-6789";
        let dets = engine(Mode::Pattern, 0.4).analyze(text);
        assert_eq!(
            surfaces(text, &dets),
            vec![
                (EntityType::EmailAddress, "alice.martin@corp.io".to_string()),
                (EntityType::UsSsn, "312-45-6789".to_string()),
            ]
        );
    }

    #[test]
    fn empty_text_has_no_detections() {
        assert!(engine(Mode::Pattern, 0.4).analyze("").is_empty());
        assert!(engine(Mode::Contextual, 0.0).analyze("").is_empty());
    }

    #[test]
    fn compact_phone_is_below_half() {
        let config = DetectorConfig::new(Mode::Contextual, [EntityType::PhoneNumber], 0.5).unwrap();
        assert!(PiiEngine::new(config).unwrap().analyze("call +14155550182").is_empty());
        let config = DetectorConfig::new(Mode::Contextual, [EntityType::PhoneNumber], 0.4).unwrap();
        assert_eq!(PiiEngine::new(config).unwrap().analyze("call +14155550182").len(), 1);
    }

    #[test]
    fn pattern_mode_never_reports_person() {
        let text = "Export medical records for Alice Martin at /patient/alice.martin";
        let pattern = engine(Mode::Pattern, 0.0).analyze(text);
        assert!(pattern.iter().all(|d| d.entity_type != EntityType::Person));
        let contextual = engine(Mode::Contextual, 0.0).analyze(text);
        assert_eq!(contextual.iter().filter(|d| d.entity_type == EntityType::Person).count(), 2);
    }

    #[test]
    fn config_rejects_empty_entities_and_bad_threshold() {
        assert_eq!(DetectorConfig::new(Mode::Pattern, [], 0.4), Err(ConfigError::NoEntities));
        assert_eq!(DetectorConfig::new(Mode::Pattern, EntityType::ALL, 1.5), Err(ConfigError::MinScore(1.5)));
    }

    #[test]
    fn entity_type_names_round_trip() {
        for e in EntityType::ALL {
            assert_eq!(e.as_str().parse::<EntityType>().unwrap(), e);
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{}\"", e.as_str()));
        }
        assert_eq!(EntityType::EmailAddress.placeholder(), "<EMAIL_ADDRESS>");
    }

    #[test]
    fn same_type_overlaps_merge_to_widest_with_max_score() {
        let d = |start, end, score| Detection {
            entity_type: EntityType::PhoneNumber,
            start,
            end,
            score,
            recogniser_id: "t".into(),
        };
        let merged = merge_same_type(vec![d(0, 5, 1.0), d(3, 12, 0.45), d(11, 14, 0.85), d(20, 22, 0.85)]);
        assert_eq!(merged.len(), 2);
        assert_eq!((merged[0].start, merged[0].end, merged[0].score), (3, 12, 1.0));
        assert_eq!((merged[1].start, merged[1].end), (20, 22));
    }

    #[test]
    fn offsets_are_characters_not_bytes() {
        let text = "Zoë paid: ssn 312-45-6789";
        let dets = engine(Mode::Pattern, 0.4).analyze(text);
        assert_eq!(surfaces(text, &dets), vec![(EntityType::UsSsn, "312-45-6789".to_string())]);
        assert_eq!(dets[0].start, 14);
    }

    #[test]
    fn pattern_scores_are_point_eight_five_or_one() {
        let text = "a@b.co 415-555-0182 312-45-6789 000-12-3456 4111111111111111 4111111111111112 \
                    GB82WEST12345698765432 GB82WEST12345698765431";
        for d in engine(Mode::Pattern, 0.0).analyze(text) {
            assert!(d.score == 0.85 || d.score == 1.0, "{d:?}");
        }
    }

    fn pii_text() -> impl Strategy<Value = String> {
        let pieces = prop::sample::select(vec![
            "alice@example.com",
            "bob%40example.org",
            "email=x.y@corp.io",
            "John Smith",
            "Maria Garcia",
            "john-smith",
            "J.Smith",
            "alice.martin",
            "415-555-0182",
            "(415) 555-0182",
            "+14155550182",
            "312-45-6789",
            "312456789",
            "4111111111111111",
            "GB82WEST12345698765432",
            "DE89370400440532013000",
            " ",
            "/",
            "; ",
            "=",
            "for ",
            "Export ",
            "records",
            "?q=1",
            "é",
            "Zoë ",
        ]);
        prop::collection::vec(pieces, 0..12).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn raising_threshold_never_adds(text in pii_text(), lo in 0.0f64..1.0, delta in 0.0f64..1.0) {
            let hi = (lo + delta).min(1.0);
            for mode in [Mode::Pattern, Mode::Contextual] {
                let low = engine(mode, lo).analyze(&text);
                let high = engine(mode, hi).analyze(&text);
                for d in &high {
                    prop_assert!(low.contains(d), "{d:?} at {hi} missing at {lo}");
                }
            }
        }

        #[test]
        fn contextual_contains_pattern(text in pii_text(), t in 0.0f64..=0.4) {
            let pattern = engine(Mode::Pattern, t).analyze(&text);
            let contextual = engine(Mode::Contextual, t).analyze(&text);
            for d in &pattern {
                prop_assert!(contextual.contains(d), "{d:?}");
            }
        }

        #[test]
        fn pattern_results_ignore_thresholds_up_to_085(text in pii_text(), t in 0.0f64..=0.85) {
            prop_assert_eq!(engine(Mode::Pattern, 0.0).analyze(&text), engine(Mode::Pattern, t).analyze(&text));
        }

        #[test]
        fn detections_are_sorted_and_in_bounds(text in pii_text()) {
            let n = text.chars().count();
            let dets = engine(Mode::Contextual, 0.0).analyze(&text);
            for w in dets.windows(2) {
                prop_assert!(w[0].start <= w[1].start);
            }
            for d in &dets {
                prop_assert!(d.start < d.end && d.end <= n);
                prop_assert!((0.0..=1.0).contains(&d.score));
            }
        }

        #[test]
        fn redaction_is_a_fixpoint(text in pii_text()) {
            let e = engine(Mode::Contextual, 0.4);
            let once = e.redact_text(&text);
            let redacted = &once.redacted_text;
            // Character ranges covered by placeholders in the redacted text.
            let chars: Vec<char> = redacted.chars().collect();
            let mut placeholders = Vec::new();
            let mut i = 0;
            while i < chars.len() {
                let rest: String = chars[i..].iter().collect();
                match EntityType::ALL.iter().map(|t| t.placeholder()).find(|p| rest.starts_with(p.as_str())) {
                    Some(p) => {
                        placeholders.push((i, i + p.len()));
                        i += p.len();
                    }
                    None => i += 1,
                }
            }
            for d in e.analyze(redacted) {
                for &(s, t) in &placeholders {
                    prop_assert!(!(d.start >= s && d.end <= t), "{d:?} inside placeholder of {redacted}");
                }
            }
        }
    }
}
