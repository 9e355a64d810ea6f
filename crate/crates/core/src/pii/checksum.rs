//! Check-digit validators used to promote pattern scores.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChecksumError {
    #[error("expected 13 to 19 ASCII digits, got {0} characters")]
    Length(usize),
    #[error("non-digit character {0:?}")]
    NonDigit(char),
}

/// Luhn check over a 13-19 digit card number.
pub fn luhn_valid(digits: &str) -> Result<bool, ChecksumError> {
    if let Some(c) = digits.chars().find(|c| !c.is_ascii_digit()) {
        return Err(ChecksumError::NonDigit(c));
    }
    if !(13..=19).contains(&digits.len()) {
        return Err(ChecksumError::Length(digits.len()));
    }
    Ok(luhn_sum(digits.bytes()) % 10 == 0)
}

fn luhn_sum(digits: impl DoubleEndedIterator<Item = u8>) -> u32 {
    digits
        .rev()
        .enumerate()
        .map(|(i, b)| {
            let d = u32::from(b - b'0');
            if i % 2 == 1 {
                let doubled = d * 2;
                if doubled > 9 {
                    doubled - 9
                } else {
                    doubled
                }
            } else {
                d
            }
        })
        .sum()
}

/// Coarse IBAN shape: two letters, two digits, 11-30 alphanumerics.
pub fn iban_shape(candidate: &str) -> bool {
    let b = candidate.as_bytes();
    (15..=34).contains(&b.len())
        && b[..2].iter().all(u8::is_ascii_uppercase)
        && b[2..4].iter().all(u8::is_ascii_digit)
        && b[4..].iter().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
}

/// ISO 13616 mod-97 check. Malformed input is simply invalid.
pub fn iban_valid(candidate: &str) -> bool {
    if !iban_shape(candidate) {
        return false;
    }
    let (head, tail) = candidate.split_at(4);
    let mut rem: u32 = 0;
    for c in tail.chars().chain(head.chars()) {
        // Letters expand to two digits (A=10 .. Z=35).
        let v = c.to_digit(36).expect("shape checked");
        rem = if v >= 10 { (rem * 100 + v) % 97 } else { (rem * 10 + v) % 97 };
    }
    rem == 1
}

/// US SSN area/group/serial plausibility on nine digits.
pub fn ssn_plausible(digits: &str) -> bool {
    let b = digits.as_bytes();
    if b.len() != 9 || !b.iter().all(u8::is_ascii_digit) {
        return false;
    }
    let area = &digits[..3];
    let group = &digits[3..5];
    let serial = &digits[5..];
    area != "000" && area != "666" && b[0] != b'9' && group != "00" && serial != "0000"
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    // Independent oracle: rearrange, expand letters, reduce as one big integer.
    fn mod97_oracle(iban: &str) -> u32 {
        let rearranged = format!("{}{}", &iban[4..], &iban[..4]);
        let numeric: String = rearranged
            .chars()
            .map(|c| if c.is_ascii_digit() { c.to_string() } else { (c as u32 - 'A' as u32 + 10).to_string() })
            .collect();
        let n: BigUint = numeric.parse().unwrap();
        (n % 97u32).try_into().unwrap()
    }

    #[test]
    fn luhn_frozen_values() {
        // Hand sum for 4111111111111111: 8 (doubled 4) + 7*2 + 8*1 = 30.
        assert_eq!(luhn_sum("4111111111111111".bytes()), 30);
        assert_eq!(luhn_valid("4111111111111111"), Ok(true));
        assert_eq!(luhn_sum("4111111111111112".bytes()), 31);
        assert_eq!(luhn_valid("4111111111111112"), Ok(false));
        assert_eq!(luhn_valid("0000000000000000"), Ok(true));
    }

    #[test]
    fn luhn_rejects_bad_input() {
        assert_eq!(luhn_valid("4111-1111-1111-1111"), Err(ChecksumError::NonDigit('-')));
        assert_eq!(luhn_valid("411111"), Err(ChecksumError::Length(6)));
        assert_eq!(luhn_valid(&"1".repeat(20)), Err(ChecksumError::Length(20)));
    }

    #[test]
    fn known_test_cards_pass() {
        for card in ["4012888888881881", "5555555555554444", "5105105105105100", "378282246310005"] {
            assert_eq!(luhn_valid(card), Ok(true), "{card}");
        }
    }

    #[test]
    fn iban_matches_big_integer_oracle() {
        assert_eq!(mod97_oracle("GB82WEST12345698765432"), 1);
        assert!(iban_valid("GB82WEST12345698765432"));
        assert_ne!(mod97_oracle("GB82WEST12345698765431"), 1);
        assert!(!iban_valid("GB82WEST12345698765431"));
        assert!(!iban_valid("XX00"));
        for iban in [
            "DE89370400440532013000",
            "GB29NWBK60161331926819",
            "DE44500105175407324931",
            "FR1420041010050500013M02606",
        ] {
            assert_eq!(iban_valid(iban), mod97_oracle(iban) == 1, "{iban}");
            assert!(iban_valid(iban), "{iban}");
        }
    }

    #[test]
    fn iban_agrees_with_oracle_on_perturbations() {
        let base = "DE89370400440532013000";
        for pos in 4..base.len() {
            for d in b'0'..=b'9' {
                let mut bytes = base.as_bytes().to_vec();
                bytes[pos] = d;
                let s = String::from_utf8(bytes).unwrap();
                assert_eq!(iban_valid(&s), mod97_oracle(&s) == 1, "{s}");
            }
        }
    }

    #[test]
    fn ssn_plausibility() {
        assert!(ssn_plausible("312456789"));
        assert!(!ssn_plausible("000456789"));
        assert!(!ssn_plausible("666456789"));
        assert!(!ssn_plausible("912456789"));
        assert!(!ssn_plausible("312006789"));
        assert!(!ssn_plausible("312450000"));
        assert!(!ssn_plausible("31245678"));
    }
}
