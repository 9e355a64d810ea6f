//! One-to-one span matching by type and overlap.

use serde::{Deserialize, Serialize};

use crate::corpus::GoldLabel;
use crate::pii::{Detection, EntityType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub entity: EntityType,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(entity: EntityType, start: usize, end: usize) -> Self {
        Span { entity, start, end }
    }

    fn overlap(&self, other: &Span) -> usize {
        self.end.min(other.end).saturating_sub(self.start.max(other.start))
    }

    pub fn matches(&self, other: &Span) -> bool {
        self.entity == other.entity && self.overlap(other) > 0
    }
}

impl From<&Detection> for Span {
    fn from(d: &Detection) -> Self {
        Span::new(d.entity_type, d.start, d.end)
    }
}

impl From<&GoldLabel> for Span {
    fn from(l: &GoldLabel) -> Self {
        Span::new(l.entity_type, l.start, l.end)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

/// Maximum one-to-one matching as (prediction index, gold index) pairs.
///
/// Predictions are taken in order of end offset; each claims the free
/// overlapping gold of its type that ends first (ties: larger overlap, then
/// earlier start). Taking the earliest-ending gold leaves the later
/// predictions every option they would otherwise have, so the pair count is
/// maximal.
pub fn matching(predictions: &[Span], gold: &[Span]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by_key(|&i| (predictions[i].end, predictions[i].start, i));
    let mut taken = vec![false; gold.len()];
    let mut pairs = Vec::new();
    for p in order {
        let pred = &predictions[p];
        let best = (0..gold.len())
            .filter(|&g| !taken[g] && pred.matches(&gold[g]))
            .min_by_key(|&g| (gold[g].end, std::cmp::Reverse(pred.overlap(&gold[g])), gold[g].start, g));
        if let Some(g) = best {
            taken[g] = true;
            pairs.push((p, g));
        }
    }
    pairs
}

/// Counts for predictions and gold labels from one field of one sample.
pub fn match_spans(predictions: &[Span], gold: &[Span]) -> Counts {
    let tp = matching(predictions, gold).len();
    Counts { tp, fp: predictions.len() - tp, fn_: gold.len() - tp }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use EntityType::*;

    /// Exhaustive maximum matching.
    fn brute_force(predictions: &[Span], gold: &[Span]) -> usize {
        fn go(i: usize, p: &[Span], g: &[Span], used: &mut Vec<bool>) -> usize {
            if i == p.len() {
                return 0;
            }
            let mut best = go(i + 1, p, g, used);
            for j in 0..g.len() {
                if !used[j] && p[i].matches(&g[j]) {
                    used[j] = true;
                    best = best.max(1 + go(i + 1, p, g, used));
                    used[j] = false;
                }
            }
            best
        }
        go(0, predictions, gold, &mut vec![false; gold.len()])
    }

    #[test]
    fn partial_overlap_counts() {
        let c = match_spans(&[Span::new(Person, 5, 15)], &[Span::new(Person, 10, 20)]);
        assert_eq!(c, Counts { tp: 1, fp: 0, fn_: 0 });
        let touching = match_spans(&[Span::new(Person, 5, 10)], &[Span::new(Person, 10, 20)]);
        assert_eq!(touching, Counts { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn type_mismatch() {
        let c = match_spans(&[Span::new(Person, 0, 5)], &[Span::new(EmailAddress, 0, 5)]);
        assert_eq!(c, Counts { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn two_predictions_one_gold() {
        let c = match_spans(&[Span::new(Person, 0, 4), Span::new(Person, 2, 8)], &[Span::new(Person, 1, 6)]);
        assert_eq!(c, Counts { tp: 1, fp: 1, fn_: 0 });
    }

    #[test]
    fn overlap_first_greedy_would_lose_a_pair() {
        // Prediction A overlaps both golds, more of the second; B only the second.
        let preds = [Span::new(Person, 0, 10), Span::new(Person, 8, 12)];
        let gold = [Span::new(Person, 0, 2), Span::new(Person, 3, 11)];
        assert_eq!(match_spans(&preds, &gold).tp, 2);
        assert_eq!(brute_force(&preds, &gold), 2);
    }

    fn span() -> impl Strategy<Value = Span> {
        (0usize..2, 0usize..12, 1usize..6).prop_map(|(t, s, l)| Span::new([Person, EmailAddress][t], s, s + l))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn agrees_with_brute_force(p in prop::collection::vec(span(), 0..=5), g in prop::collection::vec(span(), 0..=5)) {
            let c = match_spans(&p, &g);
            prop_assert_eq!(c.tp, brute_force(&p, &g));
            prop_assert_eq!(c.tp + c.fp, p.len());
            prop_assert_eq!(c.tp + c.fn_, g.len());
            let pairs = matching(&p, &g);
            for &(i, j) in &pairs {
                prop_assert!(p[i].matches(&g[j]));
            }
        }
    }
}
