//! Scores the detector against the labeled corpus.

mod latency;
mod matching;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSample, Field};
use crate::pii::{ConfigError, DetectorConfig, EntityType, Mode, PiiEngine};

pub use latency::{measure_latency, nearest_rank, summarise, time_calls, LatencyStats, TIMED_CALLS, WARMUP_CALLS};
pub use matching::{match_spans, matching, Counts, Span};
pub use report::{render_markdown, write_report, ReportError};

pub const THRESHOLDS: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];

/// Entities of the three-type subset compared against the full set.
pub const TOP_THREE: [EntityType; 3] = [EntityType::EmailAddress, EntityType::Person, EntityType::IbanCode];

/// One sweep row. `min_score` is `None` for pattern mode, whose scores do not
/// depend on a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub mode: Mode,
    pub entities: BTreeSet<EntityType>,
    pub min_score: Option<f64>,
}

impl SweepConfig {
    pub fn new(mode: Mode, entities: impl IntoIterator<Item = EntityType>, min_score: Option<f64>) -> Self {
        SweepConfig { mode, entities: entities.into_iter().collect(), min_score }
    }

    pub fn subset_label(&self) -> String {
        if self.entities.len() == EntityType::ALL.len() {
            "ALL".to_string()
        } else {
            self.entities.iter().map(|e| e.as_str()).collect::<Vec<_>>().join("+")
        }
    }

    pub fn detector(&self) -> Result<DetectorConfig, ConfigError> {
        DetectorConfig::new(self.mode, self.entities.iter().copied(), self.min_score.unwrap_or(0.0))
    }
}

impl fmt::Display for SweepConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Pattern => "PATTERN",
            Mode::Contextual => "CONTEXTUAL",
        };
        write!(f, "{mode} {}", self.subset_label())?;
        if let Some(t) = self.min_score {
            write!(f, " @{t:.1}")?;
        }
        Ok(())
    }
}

/// The 42 rows: each single type and the full set, once in pattern mode and
/// once per threshold in contextual mode.
pub fn enumerate_configs() -> Vec<SweepConfig> {
    let subsets: Vec<Vec<EntityType>> =
        EntityType::ALL.iter().map(|&e| vec![e]).chain([EntityType::ALL.to_vec()]).collect();
    let mut rows: Vec<SweepConfig> =
        subsets.iter().map(|s| SweepConfig::new(Mode::Pattern, s.iter().copied(), None)).collect();
    for s in &subsets {
        for t in THRESHOLDS {
            rows.push(SweepConfig::new(Mode::Contextual, s.iter().copied(), Some(t)));
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    /// 0/0 is taken as 0 throughout.
    pub fn from_counts(c: Counts) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Scores { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityMetrics {
    #[serde(flatten)]
    pub counts: Counts,
    #[serde(flatten)]
    pub scores: Scores,
    /// No gold labels of this type: recall is 0 by convention, not by miss.
    pub degenerate: bool,
}

/// Hits over total for gold labels of one surface form.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormRecall {
    pub matched: usize,
    pub total: usize,
}

impl FormRecall {
    pub fn recall(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub per_entity: BTreeMap<EntityType, EntityMetrics>,
    pub micro: EntityMetrics,
    pub n_gold: usize,
    pub per_field: BTreeMap<Field, BTreeMap<EntityType, Counts>>,
    /// Keyed by `(field, entity, surface form)`, written `field/ENTITY/form`.
    pub per_form: BTreeMap<String, FormRecall>,
}

impl EvalMetrics {
    pub fn entity(&self, entity: EntityType) -> EntityMetrics {
        self.per_entity.get(&entity).copied().unwrap_or(EntityMetrics {
            counts: Counts::default(),
            scores: Scores::from_counts(Counts::default()),
            degenerate: true,
        })
    }

    /// Pooled recall over labels matching `filter(field, entity, form)`.
    pub fn recall_where(&self, mut filter: impl FnMut(&str, &str, &str) -> bool) -> FormRecall {
        let mut out = FormRecall::default();
        for (key, r) in &self.per_form {
            let mut parts = key.splitn(3, '/');
            let (f, e, s) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""), parts.next().unwrap_or(""));
            if filter(f, e, s) {
                out.matched += r.matched;
                out.total += r.total;
            }
        }
        out
    }
}

#[derive(Debug, Default)]
struct Tally {
    per_entity: BTreeMap<EntityType, Counts>,
    per_field: BTreeMap<Field, BTreeMap<EntityType, Counts>>,
    per_form: BTreeMap<String, FormRecall>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (e, c) in other.per_entity {
            *self.per_entity.entry(e).or_default() += c;
        }
        for (f, m) in other.per_field {
            let slot = self.per_field.entry(f).or_default();
            for (e, c) in m {
                *slot.entry(e).or_default() += c;
            }
        }
        for (k, r) in other.per_form {
            let slot = self.per_form.entry(k).or_default();
            slot.matched += r.matched;
            slot.total += r.total;
        }
        self
    }
}

fn score_sample(engine: &PiiEngine, entities: &BTreeSet<EntityType>, sample: &CorpusSample) -> Tally {
    let mut tally = Tally::default();
    for field in Field::ALL {
        let predictions: Vec<Span> = engine.analyze(sample.field(field)).iter().map(Span::from).collect();
        let labels: Vec<_> =
            sample.labels.iter().filter(|l| l.field == field && entities.contains(&l.entity_type)).collect();
        let gold: Vec<Span> = labels.iter().map(|l| Span::from(*l)).collect();
        let pairs = matching(&predictions, &gold);
        for &entity in entities {
            let p = predictions.iter().filter(|s| s.entity == entity).count();
            let g = gold.iter().filter(|s| s.entity == entity).count();
            let tp = pairs.iter().filter(|&&(_, j)| gold[j].entity == entity).count();
            let c = Counts { tp, fp: p - tp, fn_: g - tp };
            *tally.per_entity.entry(entity).or_default() += c;
            *tally.per_field.entry(field).or_default().entry(entity).or_default() += c;
        }
        for (j, label) in labels.iter().enumerate() {
            let key = format!("{field}/{}/{}", label.entity_type, label.surface_form_id);
            let slot = tally.per_form.entry(key).or_default();
            slot.total += 1;
            slot.matched += usize::from(pairs.iter().any(|&(_, g)| g == j));
        }
    }
    tally
}

/// Analyse every field of every sample with `config` and score it against
/// the gold labels of the configured types.
pub fn evaluate(samples: &[CorpusSample], config: &SweepConfig) -> Result<EvalMetrics, ConfigError> {
    let engine = PiiEngine::new(config.detector()?)?;
    let tally =
        samples.par_iter().map(|s| score_sample(&engine, &config.entities, s)).reduce(Tally::default, Tally::merge);

    let mut micro = Counts::default();
    let mut n_gold = 0;
    let per_entity = config
        .entities
        .iter()
        .map(|&e| {
            let c = tally.per_entity.get(&e).copied().unwrap_or_default();
            micro += c;
            n_gold += c.tp + c.fn_;
            (e, EntityMetrics { counts: c, scores: Scores::from_counts(c), degenerate: c.tp + c.fn_ == 0 })
        })
        .collect();
    Ok(EvalMetrics {
        per_entity,
        micro: EntityMetrics { counts: micro, scores: Scores::from_counts(micro), degenerate: n_gold == 0 },
        n_gold,
        per_field: tally.per_field,
        per_form: tally.per_form,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config: SweepConfig,
    pub metrics: EvalMetrics,
    pub latency: LatencyStats,
}

/// Comparison of the three-type subset with the full set, both contextual at
/// 0.4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopThree {
    pub row: SweepRow,
    /// Subset micro recall divided by full-set micro recall.
    pub recall_ratio: f64,
    /// Subset true positives divided by full-set true positives.
    pub tp_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub n_samples: usize,
    pub n_labels: usize,
    pub rows: Vec<SweepRow>,
    pub top_three: TopThree,
    pub elapsed_secs: f64,
}

impl SweepReport {
    pub fn find(&self, mode: Mode, entities: &[EntityType], min_score: Option<f64>) -> Option<&SweepRow> {
        let entities: BTreeSet<EntityType> = entities.iter().copied().collect();
        self.rows
            .iter()
            .find(|r| r.config.mode == mode && r.config.entities == entities && r.config.min_score == min_score)
    }
}

/// Field texts used for latency, in corpus order.
pub fn latency_texts(samples: &[CorpusSample]) -> Vec<&str> {
    samples.iter().flat_map(|s| Field::ALL.map(|f| s.field(f))).filter(|t| !t.is_empty()).collect()
}

/// Evaluate all 42 rows plus the three-type comparison. Scoring runs in
/// parallel; latency is measured afterwards on one thread.
pub fn run_sweep(samples: &[CorpusSample]) -> Result<SweepReport, ConfigError> {
    let started = Instant::now();
    let mut configs = enumerate_configs();
    configs.push(SweepConfig::new(Mode::Contextual, TOP_THREE, Some(0.4)));
    let metrics = configs.par_iter().map(|c| evaluate(samples, c)).collect::<Result<Vec<_>, _>>()?;

    let texts = latency_texts(samples);
    let mut rows = Vec::with_capacity(configs.len());
    for (config, metrics) in configs.into_iter().zip(metrics) {
        let engine = PiiEngine::new(config.detector()?)?;
        let latency = measure_latency(&engine, &texts);
        rows.push(SweepRow { config, metrics, latency });
    }
    let top = rows.pop().expect("derived row");
    let full = rows
        .iter()
        .find(|r| r.config.mode == Mode::Contextual && r.config.entities.len() == 6 && r.config.min_score == Some(0.4))
        .expect("full contextual row at 0.4");
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let top_three = TopThree {
        recall_ratio: ratio(top.metrics.micro.scores.recall, full.metrics.micro.scores.recall),
        tp_share: ratio(top.metrics.micro.counts.tp as f64, full.metrics.micro.counts.tp as f64),
        row: top,
    };
    Ok(SweepReport {
        n_samples: samples.len(),
        n_labels: samples.iter().map(|s| s.labels.len()).sum(),
        rows,
        top_three,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}
