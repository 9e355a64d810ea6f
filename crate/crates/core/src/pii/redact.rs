use serde::{Deserialize, Serialize};

use super::Detection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedactionResult {
    pub redacted_text: String,
    pub detections_applied: Vec<Detection>,
    pub redaction_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpanError {
    #[error("span [{start}, {end}) outside text of {len} characters")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("empty span at {0}")]
    Empty(usize),
    #[error("span starting at {0} overlaps or precedes the previous span")]
    Overlap(usize),
}

/// Replace each span with `<ENTITY_TYPE>`. Spans must be sorted, disjoint and
/// in bounds; text outside them is copied unchanged.
pub fn redact(text: &str, detections: &[Detection]) -> Result<RedactionResult, SpanError> {
    let len = text.chars().count();
    let mut prev_end = 0;
    for d in detections {
        if d.end > len || d.start > len {
            return Err(SpanError::OutOfBounds { start: d.start, end: d.end, len });
        }
        if d.start >= d.end {
            return Err(SpanError::Empty(d.start));
        }
        if d.start < prev_end {
            return Err(SpanError::Overlap(d.start));
        }
        prev_end = d.end;
    }

    let mut out = String::with_capacity(text.len());
    let mut spans = detections.iter().peekable();
    let mut skip_until = None;
    for (i, c) in text.chars().enumerate() {
        if let Some(end) = skip_until {
            if i < end {
                continue;
            }
            skip_until = None;
        }
        if let Some(d) = spans.next_if(|d| d.start == i) {
            out.push('<');
            out.push_str(d.entity_type.as_str());
            out.push('>');
            skip_until = Some(d.end);
            continue;
        }
        out.push(c);
    }
    Ok(RedactionResult {
        redacted_text: out,
        detections_applied: detections.to_vec(),
        redaction_count: detections.len(),
    })
}

/// Keep a maximal disjoint subset, preferring wider spans, then higher
/// scores, then earlier starts. Output is sorted by start.
pub fn resolve_overlaps(mut detections: Vec<Detection>) -> Vec<Detection> {
    detections.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then(b.score.total_cmp(&a.score))
            .then(a.start.cmp(&b.start))
            .then(a.entity_type.cmp(&b.entity_type))
    });
    let mut kept: Vec<Detection> = Vec::with_capacity(detections.len());
    for d in detections {
        if kept.iter().all(|k| !k.overlaps(&d)) {
            kept.push(d);
        }
    }
    kept.sort_by_key(|d| d.start);
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pii::{DetectorConfig, EntityType, Mode, PiiEngine};

    fn det(entity_type: EntityType, start: usize, end: usize) -> Detection {
        Detection { entity_type, start, end, score: 0.85, recogniser_id: "t".into() }
    }

    #[test]
    fn replaces_person_with_placeholder() {
        let text = "Export medical records for Alice Martin";
        let r = redact(text, &[det(EntityType::Person, 27, 39)]).unwrap();
        assert_eq!(r.redacted_text, "Export medical records for <PERSON>");
        assert_eq!(r.redaction_count, 1);
    }

    #[test]
    fn no_detections_is_identity() {
        let r = redact("nothing here", &[]).unwrap();
        assert_eq!(r.redacted_text, "nothing here");
        assert_eq!(r.redaction_count, 0);
    }

    #[test]
    fn two_emails_and_reanalysis_is_clean() {
        let text = "a@b.co x a@b.co";
        let engine = PiiEngine::new(DetectorConfig::new(Mode::Pattern, EntityType::ALL, 0.4).unwrap()).unwrap();
        let dets = engine.analyze(text);
        let r = redact(text, &dets).unwrap();
        assert_eq!(r.redacted_text, "<EMAIL_ADDRESS> x <EMAIL_ADDRESS>");
        assert_eq!(r.redaction_count, 2);
        assert!(engine.analyze(&r.redacted_text).is_empty());
    }

    #[test]
    fn rejects_bad_spans() {
        assert_eq!(
            redact("abc", &[det(EntityType::Person, 1, 9)]),
            Err(SpanError::OutOfBounds { start: 1, end: 9, len: 3 })
        );
        assert_eq!(redact("abc", &[det(EntityType::Person, 1, 1)]), Err(SpanError::Empty(1)));
        assert_eq!(
            redact("abcdef", &[det(EntityType::Person, 0, 3), det(EntityType::UsSsn, 2, 4)]),
            Err(SpanError::Overlap(2))
        );
    }

    #[test]
    fn multibyte_text_outside_spans_is_preserved() {
        let text = "né à Zürich: 312-45-6789 ✓";
        let r = redact(text, &[det(EntityType::UsSsn, 13, 24)]).unwrap();
        assert_eq!(r.redacted_text, "né à Zürich: <US_SSN> ✓");
    }

    #[test]
    fn cross_type_overlap_keeps_widest() {
        let kept = resolve_overlaps(vec![
            det(EntityType::UsSsn, 5, 14),
            det(EntityType::EmailAddress, 0, 25),
            det(EntityType::Person, 30, 35),
        ]);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].entity_type, EntityType::EmailAddress);
        assert_eq!(kept[1].entity_type, EntityType::Person);
    }
}
