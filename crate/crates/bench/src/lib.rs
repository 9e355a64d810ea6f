//! Shared fixtures for the benchmarks.

use x402_guard::corpus::{generate, Field, GeneratorConfig};

/// Field texts from a small default-seed corpus, PII-bearing and clean mixed.
pub fn field_texts(n_samples: usize) -> Vec<String> {
    let config = GeneratorConfig { n: n_samples, ..GeneratorConfig::default() };
    let (samples, _) = generate(&config).expect("default config is valid");
    samples
        .iter()
        .flat_map(|s| [Field::ResourceUrl, Field::Description, Field::Reason].map(|f| s.field(f).to_string()))
        .collect()
}
