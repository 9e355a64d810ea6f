//! Individual entity recognisers.
//!
//! Pattern recognisers score 0.85, promoted to 1.0 when a check-digit or
//! plausibility validator passes. Contextual recognisers carry their own
//! fixed scores. All spans here are byte offsets; the engine converts them to
//! character offsets.

use std::sync::LazyLock;

use regex::Regex;

use super::checksum::{iban_shape, iban_valid, luhn_valid, ssn_plausible};
use super::lexicon;
use super::EntityType;

pub const PATTERN_SCORE: f64 = 0.85;
pub const VALIDATED_SCORE: f64 = 1.0;
pub const NAME_SCORE: f64 = 0.6;
pub const COMPACT_PHONE_SCORE: f64 = 0.45;

/// A match in byte coordinates of the scanned text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawMatch {
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

/// One detector for one entity type.
pub trait Recogniser: Send + Sync {
    fn id(&self) -> &'static str;
    fn entity(&self) -> EntityType;
    fn scan(&self, text: &str) -> Vec<RawMatch>;
}

fn regex(pattern: &str) -> Regex {
    Regex::new(pattern).expect("static pattern")
}

fn char_before(text: &str, i: usize) -> Option<char> {
    text[..i].chars().next_back()
}

fn char_after(text: &str, i: usize) -> Option<char> {
    text[i..].chars().next()
}

/// True when neither neighbour is alphanumeric or one of `extra`.
fn isolated(text: &str, start: usize, end: usize, extra: &[char]) -> bool {
    let ok = |c: Option<char>| c.map_or(true, |c| !c.is_alphanumeric() && !extra.contains(&c));
    ok(char_before(text, start)) && ok(char_after(text, end))
}

pub fn pattern_recognisers() -> Vec<Box<dyn Recogniser>> {
    vec![
        Box::new(EmailRecogniser),
        Box::new(UsPhoneRecogniser),
        Box::new(SsnRecogniser),
        Box::new(CreditCardRecogniser),
        Box::new(IbanRecogniser),
    ]
}

pub fn contextual_recognisers() -> Vec<Box<dyn Recogniser>> {
    vec![Box::new(PersonNameRecogniser), Box::new(CompactPhoneRecogniser)]
}

// --- email -----------------------------------------------------------------

static EMAIL_RE: LazyLock<Regex> =
    LazyLock::new(|| regex(r"[A-Za-z0-9._+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}"));

/// Bare, `%40`-encoded and query-parameter addresses.
pub struct EmailRecogniser;

/// `text` with every `%40` decoded to `@`, plus a map from decoded byte
/// offsets back to original ones (one extra slot for the end position).
fn decode_at_escapes(text: &str) -> (String, Vec<usize>) {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut origin = Vec::with_capacity(bytes.len() + 1);
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() && bytes[i + 1] == b'4' && bytes[i + 2] == b'0' {
            out.push(b'@');
            origin.push(i);
            i += 3;
        } else {
            out.push(bytes[i]);
            origin.push(i);
            i += 1;
        }
    }
    origin.push(bytes.len());
    // Only an ASCII triple was replaced by an ASCII byte, so UTF-8 is intact.
    (String::from_utf8(out).expect("utf-8 preserved"), origin)
}

impl Recogniser for EmailRecogniser {
    fn id(&self) -> &'static str {
        "email_pattern"
    }

    fn entity(&self) -> EntityType {
        EntityType::EmailAddress
    }

    fn scan(&self, text: &str) -> Vec<RawMatch> {
        if !text.contains('@') && !text.contains("%40") {
            return Vec::new();
        }
        let (decoded, origin) = decode_at_escapes(text);
        EMAIL_RE
            .find_iter(&decoded)
            .map(|m| RawMatch { start: origin[m.start()], end: origin[m.end()], score: PATTERN_SCORE })
            .collect()
    }
}

// --- phone -----------------------------------------------------------------

static US_PHONE_RE: LazyLock<Regex> = LazyLock::new(|| {
    regex(r"(?:\+1[ .-]?)?(?:\([0-9]{3}\) ?[0-9]{3}-[0-9]{4}|[0-9]{3}-[0-9]{3}-[0-9]{4}|[0-9]{3}\.[0-9]{3}\.[0-9]{4})")
});

/// Delimited US numbers only; undelimited international numbers are left to
/// the contextual recogniser.
pub struct UsPhoneRecogniser;

impl Recogniser for UsPhoneRecogniser {
    fn id(&self) -> &'static str {
        "us_phone_pattern"
    }

    fn entity(&self) -> EntityType {
        EntityType::PhoneNumber
    }

    fn scan(&self, text: &str) -> Vec<RawMatch> {
        US_PHONE_RE
            .find_iter(text)
            .filter(|m| isolated(text, m.start(), m.end(), &['-', '+']))
            .map(|m| RawMatch { start: m.start(), end: m.end(), score: PATTERN_SCORE })
            .collect()
    }
}

// --- ssn -------------------------------------------------------------------

static SSN_DASHED_RE: LazyLock<Regex> = LazyLock::new(|| regex(r"[0-9]{3}-[0-9]{2}-[0-9]{4}"));
static DIGIT_RUN_RE: LazyLock<Regex> = LazyLock::new(|| regex(r"[0-9]+"));

/// Dashed `ddd-dd-dddd` and compact nine-digit forms.
pub struct SsnRecogniser;

impl Recogniser for SsnRecogniser {
    fn id(&self) -> &'static str {
        "us_ssn_pattern"
    }

    fn entity(&self) -> EntityType {
        EntityType::UsSsn
    }

    fn scan(&self, text: &str) -> Vec<RawMatch> {
        let mut out: Vec<RawMatch> = SSN_DASHED_RE
            .find_iter(text)
            .filter(|m| isolated(text, m.start(), m.end(), &['-']))
            .map(|m| {
                let digits: String = m.as_str().chars().filter(char::is_ascii_digit).collect();
                let score = if ssn_plausible(&digits) { VALIDATED_SCORE } else { PATTERN_SCORE };
                RawMatch { start: m.start(), end: m.end(), score }
            })
            .collect();
        out.extend(
            DIGIT_RUN_RE
                .find_iter(text)
                .filter(|m| m.len() == 9 && ssn_plausible(m.as_str()))
                .filter(|m| isolated(text, m.start(), m.end(), &['-', '.', '+', '%', ',']))
                .map(|m| RawMatch { start: m.start(), end: m.end(), score: PATTERN_SCORE }),
        );
        out
    }
}

// --- credit card -----------------------------------------------------------

static CARD_GROUPED_RE: LazyLock<Regex> = LazyLock::new(|| regex(r"[0-9]{4}(?:[ -][0-9]{4}){3}"));

/// 13-19 digit runs and 4x4 grouped numbers; Luhn promotes the score.
pub struct CreditCardRecogniser;

impl Recogniser for CreditCardRecogniser {
    fn id(&self) -> &'static str {
        "credit_card_pattern"
    }

    fn entity(&self) -> EntityType {
        EntityType::CreditCard
    }

    fn scan(&self, text: &str) -> Vec<RawMatch> {
        let score = |digits: &str| {
            if luhn_valid(digits).unwrap_or(false) {
                VALIDATED_SCORE
            } else {
                PATTERN_SCORE
            }
        };
        let mut out: Vec<RawMatch> = DIGIT_RUN_RE
            .find_iter(text)
            .filter(|m| (13..=19).contains(&m.len()))
            .filter(|m| isolated(text, m.start(), m.end(), &['-', '.', '+', '%', ',']))
            .map(|m| RawMatch { start: m.start(), end: m.end(), score: score(m.as_str()) })
            .collect();
        out.extend(CARD_GROUPED_RE.find_iter(text).filter(|m| isolated(text, m.start(), m.end(), &['-'])).map(|m| {
            let digits: String = m.as_str().chars().filter(char::is_ascii_digit).collect();
            RawMatch { start: m.start(), end: m.end(), score: score(&digits) }
        }));
        out
    }
}

// --- iban ------------------------------------------------------------------

static IBAN_COMPACT_RE: LazyLock<Regex> = LazyLock::new(|| regex(r"[A-Z]{2}[0-9]{2}[A-Z0-9]{11,30}"));
static IBAN_SPACED_RE: LazyLock<Regex> =
    LazyLock::new(|| regex(r"[A-Z]{2}[0-9]{2}(?: [A-Z0-9]{4}){2,7}(?: [A-Z0-9]{1,3})?"));

/// Compact and four-character-grouped IBANs; mod-97 promotes the score.
pub struct IbanRecogniser;

impl Recogniser for IbanRecogniser {
    fn id(&self) -> &'static str {
        "iban_pattern"
    }

    fn entity(&self) -> EntityType {
        EntityType::IbanCode
    }

    fn scan(&self, text: &str) -> Vec<RawMatch> {
        let mut out = Vec::new();
        for re in [&*IBAN_COMPACT_RE, &*IBAN_SPACED_RE] {
            for m in re.find_iter(text) {
                if !isolated(text, m.start(), m.end(), &[]) {
                    continue;
                }
                let compact: String = m.as_str().chars().filter(|c| *c != ' ').collect();
                if !iban_shape(&compact) {
                    continue;
                }
                let score = if iban_valid(&compact) { VALIDATED_SCORE } else { PATTERN_SCORE };
                out.push(RawMatch { start: m.start(), end: m.end(), score });
            }
        }
        out
    }
}

// --- contextual: person names ------------------------------------------------

static CAPITALISED_RE: LazyLock<Regex> = LazyLock::new(|| regex(r"[A-Z][a-z]+"));
static DOTTED_HANDLE_RE: LazyLock<Regex> = LazyLock::new(|| regex(r"[a-z]+\.[a-z]+"));

/// Heuristic name finder standing in for a statistical NER model.
///
/// Fires on a capitalised bigram in running text whose first word is a known
/// given name, and on a lowercase `first.last` handle that forms a whole path
/// segment or parameter value. Hyphen and underscore slugs, initials
/// (`J.Smith`), `Last,First` and lone first names are not recognised.
pub struct PersonNameRecogniser;

impl PersonNameRecogniser {
    fn bigrams(text: &str, out: &mut Vec<RawMatch>) {
        let words: Vec<_> = CAPITALISED_RE
            .find_iter(text)
            .filter(|m| isolated(text, m.start(), m.end(), &['.', '_', '-', '/', '@', '%']))
            .collect();
        for pair in words.windows(2) {
            let (first, last) = (pair[0], pair[1]);
            let gap = &text[first.end()..last.start()];
            if gap.is_empty() || !gap.bytes().all(|b| b == b' ') {
                continue;
            }
            if lexicon::is_first_name(first.as_str()) {
                out.push(RawMatch { start: first.start(), end: last.end(), score: NAME_SCORE });
            }
        }
    }

    fn handles(text: &str, out: &mut Vec<RawMatch>) {
        for m in DOTTED_HANDLE_RE.find_iter(text) {
            let before_ok = char_before(text, m.start()).map_or(true, |c| matches!(c, '/' | '=' | ' ' | ':'));
            let after_ok =
                char_after(text, m.end()).map_or(true, |c| matches!(c, '/' | '?' | '&' | '#' | ';' | ' ' | ','));
            let (first, last) = m.as_str().split_once('.').expect("regex has a dot");
            if before_ok && after_ok && last.len() >= 2 && lexicon::is_first_name(first) {
                out.push(RawMatch { start: m.start(), end: m.end(), score: NAME_SCORE });
            }
        }
    }
}

impl Recogniser for PersonNameRecogniser {
    fn id(&self) -> &'static str {
        "person_context"
    }

    fn entity(&self) -> EntityType {
        EntityType::Person
    }

    fn scan(&self, text: &str) -> Vec<RawMatch> {
        let mut out = Vec::new();
        Self::bigrams(text, &mut out);
        Self::handles(text, &mut out);
        out
    }
}

// --- contextual: compact international phone ---------------------------------

static COMPACT_PHONE_RE: LazyLock<Regex> = LazyLock::new(|| regex(r"\+[0-9]{10,14}"));

/// `+` followed by 10-14 digits, scored just under the usual 0.5 cut-off.
pub struct CompactPhoneRecogniser;

impl Recogniser for CompactPhoneRecogniser {
    fn id(&self) -> &'static str {
        "compact_phone_context"
    }

    fn entity(&self) -> EntityType {
        EntityType::PhoneNumber
    }

    fn scan(&self, text: &str) -> Vec<RawMatch> {
        COMPACT_PHONE_RE
            .find_iter(text)
            .filter(|m| isolated(text, m.start(), m.end(), &['+']))
            .map(|m| RawMatch { start: m.start(), end: m.end(), score: COMPACT_PHONE_SCORE })
            .collect()
    }
}
