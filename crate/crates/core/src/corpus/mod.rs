//! Seeded generator for the labeled metadata corpus.
//!
//! Counts are allocated by quota (largest remainder) rather than drawn
//! independently, so the default configuration reproduces the target
//! category, entity and field tables exactly. The seed decides which samples
//! carry PII, which labels share a sample, and all template choices.

mod forms;
mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::client::MetadataTriple;
use crate::pii::EntityType;

pub use forms::{default_pool, surface_form, surface_forms, SurfaceForm, COMPACT_PHONE_FORM};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const META_FILE: &str = "corpus_meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    AiInference,
    DataAccess,
    Medical,
    Compute,
    Media,
    Financial,
    Generic,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::AiInference,
        Category::DataAccess,
        Category::Medical,
        Category::Compute,
        Category::Media,
        Category::Financial,
        Category::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::AiInference => "ai_inference",
            Category::DataAccess => "data_access",
            Category::Medical => "medical",
            Category::Compute => "compute",
            Category::Media => "media",
            Category::Financial => "financial",
            Category::Generic => "generic",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    ResourceUrl,
    Description,
    Reason,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::ResourceUrl, Field::Description, Field::Reason];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::ResourceUrl => "resource_url",
            Field::Description => "description",
            Field::Reason => "reason",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One injected entity. `start..end` are character offsets into `field`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldLabel {
    pub field: Field,
    pub entity_type: EntityType,
    pub start: usize,
    pub end: usize,
    pub surface_form_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSample {
    pub id: u64,
    pub category: Category,
    #[serde(flatten)]
    pub triple: MetadataTriple,
    pub labels: Vec<GoldLabel>,
}

impl CorpusSample {
    pub fn field(&self, field: Field) -> &str {
        match field {
            Field::ResourceUrl => &self.triple.resource_url,
            Field::Description => &self.triple.description,
            Field::Reason => &self.triple.reason,
        }
    }

    /// The labeled text, sliced by character offsets.
    pub fn surface(&self, label: &GoldLabel) -> Option<String> {
        let text = self.field(label.field);
        if label.start >= label.end || label.end > text.chars().count() {
            return None;
        }
        Some(text.chars().skip(label.start).take(label.end - label.start).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub category: Category,
    pub weight: f64,
    /// Relative share of each allowed entity type among this category's labels.
    pub entity_weights: BTreeMap<EntityType, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormWeight {
    pub form: String,
    pub weight: f64,
    /// Placement weights over resource_url, description, reason.
    pub field_weights: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n: usize,
    pub pii_rate: f64,
    /// Second-entity labels per PII-positive sample.
    pub extra_label_rate: f64,
    pub categories: Vec<CategorySpec>,
    pub surface_forms: BTreeMap<EntityType, Vec<FormWeight>>,
    pub pools: BTreeMap<EntityType, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("n must be positive")]
    EmptyCorpus,
    #[error("pii_rate must lie in [0, 1], got {0}")]
    PiiRate(f64),
    #[error("extra_label_rate must lie in [0, 1], got {0}")]
    ExtraRate(f64),
    #[error("invalid weights for {0}")]
    Weights(String),
    #[error("unknown surface form {form:?} for {entity}")]
    UnknownForm { entity: EntityType, form: String },
    #[error("no pool value fits surface form {0}")]
    EmptyPool(String),
    #[error("{category} cannot place two labels of one sample in distinct fields")]
    Infeasible { category: Category },
}

fn form(id: &str, weight: f64, field_weights: [f64; 3]) -> FormWeight {
    FormWeight { form: id.to_string(), weight, field_weights }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        use EntityType::*;
        let category = |category, weight, entities: &[(EntityType, f64)]| CategorySpec {
            category,
            weight,
            entity_weights: entities.iter().copied().collect(),
        };
        let categories = vec![
            category(Category::AiInference, 18.0, &[(Person, 72.0), (EmailAddress, 86.0)]),
            category(
                Category::DataAccess,
                18.0,
                &[(IbanCode, 10.0), (UsSsn, 30.0), (PhoneNumber, 8.0), (Person, 50.0), (EmailAddress, 59.0)],
            ),
            category(Category::Medical, 15.0, &[(UsSsn, 55.0), (PhoneNumber, 16.0), (Person, 60.0)]),
            category(Category::Compute, 13.0, &[(Person, 52.0), (EmailAddress, 62.0)]),
            category(Category::Media, 13.0, &[(Person, 52.0), (EmailAddress, 62.0)]),
            category(Category::Financial, 13.0, &[(CreditCard, 28.0), (IbanCode, 86.0)]),
            category(Category::Generic, 10.0, &[(PhoneNumber, 8.0), (Person, 35.0), (EmailAddress, 44.0)]),
        ];

        let text = [0.0, 0.55, 0.45];
        let url = [1.0, 0.0, 0.0];
        let anywhere = [0.15, 0.45, 0.40];
        let mut surface = BTreeMap::new();
        surface.insert(
            EmailAddress,
            vec![
                form("bare", 0.40, [0.20, 0.43, 0.37]),
                form("url_encoded", 0.30, url),
                form("query_param", 0.30, [0.80, 0.0, 0.20]),
            ],
        );
        let mut person: Vec<FormWeight> =
            ["full_john_smith", "full_maria_garcia", "full_wei_chen", "full_aisha_patel", "full_lars_eriksson"]
                .iter()
                .map(|id| form(id, 0.09, text))
                .collect();
        person.extend([
            form("slug_john_smith", 0.10, url),
            form("slug_maria_garcia", 0.10, url),
            form("underscore_john_smith", 0.08, url),
            form("abbreviated_j_smith", 0.08, url),
            form("last_first_garcia_maria", 0.08, url),
            form("first_only_aisha", 0.11, [0.6, 0.4, 0.0]),
        ]);
        surface.insert(Person, person);
        surface.insert(
            PhoneNumber,
            vec![
                form("us_dashed", 0.30, anywhere),
                form("us_parenthesised", 0.24, text),
                form("us_dotted", 0.24, anywhere),
                form(COMPACT_PHONE_FORM, 0.22, anywhere),
            ],
        );
        surface.insert(UsSsn, vec![form("dashed", 0.6, anywhere), form("compact", 0.4, anywhere)]);
        surface.insert(CreditCard, vec![form("visa", 0.5, anywhere), form("mastercard", 0.5, anywhere)]);
        surface.insert(IbanCode, vec![form("de", 0.5, [0.2, 0.42, 0.38]), form("gb", 0.5, [0.2, 0.42, 0.38])]);

        GeneratorConfig {
            seed: 42,
            n: 2000,
            pii_rate: 0.36,
            extra_label_rate: 0.2119,
            categories,
            surface_forms: surface,
            pools: EntityType::ALL.iter().map(|&e| (e, default_pool(e))).collect(),
        }
    }
}

fn check_weights(what: impl Into<String>, weights: impl IntoIterator<Item = f64>) -> Result<(), ConfigError> {
    let weights: Vec<f64> = weights.into_iter().collect();
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) || sum <= 0.0 {
        return Err(ConfigError::Weights(what.into()));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::EmptyCorpus);
        }
        if !(0.0..=1.0).contains(&self.pii_rate) {
            return Err(ConfigError::PiiRate(self.pii_rate));
        }
        if !(0.0..=1.0).contains(&self.extra_label_rate) {
            return Err(ConfigError::ExtraRate(self.extra_label_rate));
        }
        check_weights("categories", self.categories.iter().map(|c| c.weight))?;
        for spec in &self.categories {
            check_weights(spec.category.as_str(), spec.entity_weights.values().copied())?;
            for entity in spec.entity_weights.keys() {
                let forms = self.surface_forms.get(entity).ok_or_else(|| ConfigError::Weights(entity.to_string()))?;
                check_weights(entity.as_str(), forms.iter().map(|f| f.weight))?;
            }
        }
        for (&entity, forms) in &self.surface_forms {
            for fw in forms {
                let sf = surface_form(entity, &fw.form)
                    .ok_or_else(|| ConfigError::UnknownForm { entity, form: fw.form.clone() })?;
                check_weights(format!("{entity}/{}", fw.form), fw.field_weights)?;
                if sf.uses_pool() && !self.pools.get(&entity).is_some_and(|p| p.iter().any(|v| sf.accepts(v))) {
                    return Err(ConfigError::EmptyPool(fw.form.clone()));
                }
            }
        }
        Ok(())
    }

    /// Samples per category, by largest remainder over the weights.
    pub fn category_counts(&self) -> Vec<(Category, usize)> {
        let weights: Vec<f64> = self.categories.iter().map(|c| c.weight).collect();
        self.categories.iter().map(|c| c.category).zip(apportion(self.n, &weights)).collect()
    }
}

/// Largest-remainder apportionment of `total` over `weights`. Ties go to the
/// lower index.
pub fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut seats: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = seats.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        seats[i] += 1;
    }
    seats
}

#[derive(Debug, Clone, Copy)]
struct Planned {
    entity: EntityType,
    form: SurfaceForm,
    field: Field,
}

/// Exact (entity, form, field) label plan for `count` labels of one entity.
fn plan_entity(entity: EntityType, count: usize, forms: &[FormWeight], rng: &mut ChaCha8Rng) -> Vec<Planned> {
    let weights: Vec<f64> = forms.iter().map(|f| f.weight).collect();
    let mut out = Vec::with_capacity(count);
    for (fw, n) in forms.iter().zip(apportion(count, &weights)) {
        let sf = surface_form(entity, &fw.form).expect("validated");
        for (field, m) in Field::ALL.into_iter().zip(apportion(n, &fw.field_weights)) {
            out.extend(std::iter::repeat(Planned { entity, form: sf, field }).take(m));
        }
    }
    out.shuffle(rng);
    out
}

/// Lay labels out as `pairs` two-label groups followed by singles, swapping
/// until no pair has both labels in one field.
fn arrange(mut labels: Vec<Planned>, pairs: usize, category: Category) -> Result<Vec<Vec<Planned>>, ConfigError> {
    let paired = 2 * pairs;
    for i in 0..pairs {
        let (a, b) = (2 * i, 2 * i + 1);
        if labels[a].field != labels[b].field {
            continue;
        }
        let candidate = (0..labels.len())
            .filter(|&j| j != a && j != b)
            .find(|&j| labels[j].field != labels[a].field && (j >= paired || labels[j ^ 1].field != labels[b].field));
        let j = candidate.ok_or(ConfigError::Infeasible { category })?;
        labels.swap(b, j);
    }
    let mut groups: Vec<Vec<Planned>> = labels[..paired].chunks(2).map(<[Planned]>::to_vec).collect();
    groups.extend(labels[paired..].iter().map(|p| vec![*p]));
    Ok(groups)
}

struct Renderer<'a> {
    config: &'a GeneratorConfig,
    rng: ChaCha8Rng,
}

impl Renderer<'_> {
    fn pick<'t>(&mut self, items: &'t [&'t str]) -> &'t str {
        items.choose(&mut self.rng).expect("nonempty template list")
    }

    fn value(&mut self, p: &Planned) -> String {
        if !p.form.uses_pool() {
            return p.form.render("");
        }
        let pool: Vec<&String> = self.config.pools[&p.entity].iter().filter(|v| p.form.accepts(v)).collect();
        p.form.render(pool.choose(&mut self.rng).expect("validated pool"))
    }

    fn sample(&mut self, id: u64, category: Category, labels: &[Planned]) -> CorpusSample {
        let t = templates::templates(category);
        let mut gold = Vec::new();
        let at = |f: Field| labels.iter().find(|p| p.field == f);

        let base = format!("https://{}{}", self.pick(t.hosts), self.pick(t.paths));
        let resource_url = match at(Field::ResourceUrl) {
            None => format!("{base}/{}", self.pick(templates::CLEAN_SEGMENTS)),
            Some(p) => {
                let surface = self.value(p);
                let (prefix, suffix) = if p.form.is_parameter() {
                    (format!("{base}?"), String::new())
                } else {
                    (format!("{base}/"), self.pick(templates::TAIL_SEGMENTS).to_string())
                };
                gold.push(label(p, &prefix, &surface));
                format!("{prefix}{surface}{suffix}")
            }
        };

        let mut text = |field: Field, pool: &[&'static str], r: &mut Self| {
            let sentence = r.pick(pool).to_string();
            match at(field) {
                None => sentence,
                Some(p) => {
                    let surface = r.value(p);
                    let prefix = if p.form.is_parameter() {
                        format!("{sentence}; ")
                    } else {
                        format!("{sentence} {} ", r.pick(templates::lead_ins(p.entity)))
                    };
                    gold.push(label(p, &prefix, &surface));
                    format!("{prefix}{surface}")
                }
            }
        };
        let description = text(Field::Description, t.descriptions, self);
        let reason = text(Field::Reason, t.reasons, self);
        gold.sort_by_key(|l| l.field);
        CorpusSample { id, category, triple: MetadataTriple { resource_url, description, reason }, labels: gold }
    }
}

fn label(p: &Planned, prefix: &str, surface: &str) -> GoldLabel {
    let start = prefix.chars().count();
    GoldLabel {
        field: p.field,
        entity_type: p.entity,
        start,
        end: start + surface.chars().count(),
        surface_form_id: p.form.id.to_string(),
    }
}

/// Generate the corpus and its manifest. Deterministic in `config`.
pub fn generate(config: &GeneratorConfig) -> Result<(Vec<CorpusSample>, CorpusMeta), ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let counts = config.category_counts();
    let positives: Vec<usize> = counts.iter().map(|&(_, n)| (config.pii_rate * n as f64).round() as usize).collect();
    let total_positive: usize = positives.iter().sum();
    let extra_total = ((total_positive as f64 * config.extra_label_rate).round() as usize).min(total_positive);
    let pos_weights: Vec<f64> = positives.iter().map(|&p| p as f64).collect();
    let extras = apportion(extra_total, &pos_weights);

    // Entity label counts per category, then one global (form, field) plan
    // per entity that the categories draw from.
    let per_category: Vec<Vec<(EntityType, usize)>> = config
        .categories
        .iter()
        .zip(positives.iter().zip(&extras))
        .map(|(spec, (&p, &e))| {
            let entities: Vec<EntityType> = spec.entity_weights.keys().copied().collect();
            let weights: Vec<f64> = spec.entity_weights.values().copied().collect();
            entities.into_iter().zip(apportion(p + e, &weights)).collect()
        })
        .collect();
    let mut plans: BTreeMap<EntityType, Vec<Planned>> = BTreeMap::new();
    for entity in EntityType::ALL {
        let needed: usize = per_category.iter().flatten().filter(|(e, _)| *e == entity).map(|(_, n)| n).sum();
        if needed > 0 {
            plans.insert(entity, plan_entity(entity, needed, &config.surface_forms[&entity], &mut rng));
        }
    }

    let mut drafts: Vec<(Category, Vec<Planned>)> = Vec::with_capacity(config.n);
    for (i, &(category, n)) in counts.iter().enumerate() {
        let mut labels = Vec::new();
        for &(entity, k) in &per_category[i] {
            let pool = plans.get_mut(&entity).expect("planned");
            labels.extend(pool.drain(..k));
        }
        labels.shuffle(&mut rng);
        let mut groups = arrange(labels, extras[i], category)?;
        groups.resize(n, Vec::new());
        groups.shuffle(&mut rng);
        drafts.extend(groups.into_iter().map(|g| (category, g)));
    }
    drafts.shuffle(&mut rng);

    let mut renderer = Renderer { config, rng };
    let samples: Vec<CorpusSample> =
        drafts.iter().enumerate().map(|(id, (category, g))| renderer.sample(id as u64, *category, g)).collect();
    let meta = CorpusMeta::derive(&samples, config);
    Ok((samples, meta))
}

/// Summary written next to the corpus. Everything except `config` can be
/// recomputed from the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub seed: u64,
    pub n_samples: usize,
    pub pii_positive_samples: usize,
    pub labels_total: usize,
    pub category_counts: BTreeMap<Category, usize>,
    pub pii_positive_by_category: BTreeMap<Category, usize>,
    pub entity_counts: BTreeMap<EntityType, usize>,
    pub field_counts: BTreeMap<Field, usize>,
    pub surface_form_counts: BTreeMap<EntityType, BTreeMap<String, usize>>,
    /// Share of phone labels written with delimiters, i.e. the phone recall
    /// a delimiter-based pattern can reach.
    pub phone_delimited_fraction: f64,
    pub config: GeneratorConfig,
}

impl CorpusMeta {
    pub fn derive(samples: &[CorpusSample], config: &GeneratorConfig) -> Self {
        let mut meta = CorpusMeta {
            seed: config.seed,
            n_samples: samples.len(),
            pii_positive_samples: samples.iter().filter(|s| !s.labels.is_empty()).count(),
            labels_total: samples.iter().map(|s| s.labels.len()).sum(),
            category_counts: BTreeMap::new(),
            pii_positive_by_category: BTreeMap::new(),
            entity_counts: BTreeMap::new(),
            field_counts: BTreeMap::new(),
            surface_form_counts: BTreeMap::new(),
            phone_delimited_fraction: 0.0,
            config: config.clone(),
        };
        for s in samples {
            *meta.category_counts.entry(s.category).or_default() += 1;
            if !s.labels.is_empty() {
                *meta.pii_positive_by_category.entry(s.category).or_default() += 1;
            }
            for l in &s.labels {
                *meta.entity_counts.entry(l.entity_type).or_default() += 1;
                *meta.field_counts.entry(l.field).or_default() += 1;
                *meta
                    .surface_form_counts
                    .entry(l.entity_type)
                    .or_default()
                    .entry(l.surface_form_id.clone())
                    .or_default() += 1;
            }
        }
        let phones = meta.surface_form_counts.get(&EntityType::PhoneNumber);
        let total: usize = phones.map_or(0, |m| m.values().sum());
        let compact = phones.and_then(|m| m.get(COMPACT_PHONE_FORM)).copied().unwrap_or(0);
        if total > 0 {
            meta.phone_delimited_fraction = (total - compact) as f64 / total as f64;
        }
        meta
    }

    pub fn entity_share(&self, entity: EntityType) -> f64 {
        share(self.entity_counts.get(&entity).copied().unwrap_or(0), self.labels_total)
    }

    pub fn field_share(&self, field: Field) -> f64 {
        share(self.field_counts.get(&field).copied().unwrap_or(0), self.labels_total)
    }
}

fn share(part: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

/// Every disagreement between the samples and the manifest, plus every label
/// that is out of bounds, outside its category's entity set, or not a
/// rendering of its surface form.
pub fn check_consistency(samples: &[CorpusSample], meta: &CorpusMeta) -> Vec<String> {
    let mut issues = Vec::new();
    let derived = CorpusMeta::derive(samples, &meta.config);
    if derived != *meta {
        let (a, b) = (serde_json::to_value(&derived).unwrap(), serde_json::to_value(meta).unwrap());
        for (key, value) in a.as_object().unwrap() {
            if b.get(key) != Some(value) {
                issues.push(format!("manifest field {key} does not match corpus"));
            }
        }
    }
    for s in samples {
        let allowed = meta.config.categories.iter().find(|c| c.category == s.category);
        for l in &s.labels {
            if !allowed.is_some_and(|c| c.entity_weights.contains_key(&l.entity_type)) {
                issues.push(format!("sample {}: {} not allowed in {}", s.id, l.entity_type, s.category));
            }
            let Some(surface) = s.surface(l) else {
                issues.push(format!("sample {}: label {}..{} out of bounds", s.id, l.start, l.end));
                continue;
            };
            let rendered = surface_form(l.entity_type, &l.surface_form_id).is_some_and(|sf| {
                if sf.uses_pool() {
                    meta.config
                        .pools
                        .get(&l.entity_type)
                        .is_some_and(|p| p.iter().filter(|v| sf.accepts(v)).any(|v| sf.render(v) == surface))
                } else {
                    sf.render("") == surface
                }
            });
            if !rendered {
                issues.push(format!("sample {}: span is not a {} rendering", s.id, l.surface_form_id));
            }
        }
    }
    issues
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path} line {line}: {source}")]
    Parse { path: PathBuf, line: usize, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusIoError + '_ {
    move |source| CorpusIoError::Io { path: path.to_path_buf(), source }
}

/// Write `corpus.jsonl` and `corpus_meta.json` into `dir`, creating it.
pub fn write_corpus(samples: &[CorpusSample], meta: &CorpusMeta, dir: &Path) -> Result<(), CorpusIoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(CORPUS_FILE);
    let mut out = io::BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
    for s in samples {
        let line = serde_json::to_string(s).expect("sample serialises");
        writeln!(out, "{line}").map_err(io_err(&path))?;
    }
    out.flush().map_err(io_err(&path))?;
    let meta_path = dir.join(META_FILE);
    let mut text = serde_json::to_string_pretty(meta).expect("meta serialises");
    text.push('\n');
    fs::write(&meta_path, text).map_err(io_err(&meta_path))
}

pub fn read_samples(path: &Path) -> Result<Vec<CorpusSample>, CorpusIoError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut samples = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample = serde_json::from_str(&line).map_err(|source| CorpusIoError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        samples.push(sample);
    }
    Ok(samples)
}

pub fn read_meta(path: &Path) -> Result<CorpusMeta, CorpusIoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CorpusIoError::Parse { path: path.to_path_buf(), line: 0, source })
}

/// Accepts either a corpus directory or the jsonl file itself.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusSample>, CorpusIoError> {
    if path.is_dir() {
        read_samples(&path.join(CORPUS_FILE))
    } else {
        read_samples(path)
    }
}
