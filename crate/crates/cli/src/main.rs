use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use x402_guard::audit::FileSink;
use x402_guard::client::{AgentContext, Status};
use x402_guard::corpus::{self, GeneratorConfig};
use x402_guard::eval;
use x402_guard::testbed::{HarnessOptions, ServerBehaviour, Testbed, DEFAULT_PRICE};
use x402_guard::{audit, ChainHead, EntityType, Mode, PolicyConfig, VerifyResult};

#[derive(Debug, Parser)]
#[command(name = "x402-guard", version, about = "Client-side hardening for HTTP 402 micropayments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the labeled evaluation corpus.
    GenCorpus {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// Fraction of PII-positive samples in each category.
        #[arg(long)]
        pii_rate: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score all detector configurations against a corpus.
    Sweep {
        /// Corpus directory or corpus.jsonl.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the HMAC chain of an audit log. Uses `<log>.head` when present.
    VerifyAudit {
        #[arg(long)]
        log: PathBuf,
        /// File whose raw bytes are the audit key.
        #[arg(long)]
        key_file: PathBuf,
    },
    /// Run one adversarial scenario against the in-process testbed.
    Demo {
        #[arg(long, value_enum)]
        scenario: Scenario,
        /// JSON policy; a slack default is used when omitted.
        #[arg(long)]
        policy_file: Option<PathBuf>,
        /// Also write the scenario's audit log (and head) here.
        #[arg(long)]
        audit_log: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scenario {
    Honest,
    PriceInflation,
    PiiInstructing,
    ReplayEcho,
}

impl Scenario {
    fn behaviours(self) -> Vec<ServerBehaviour> {
        match self {
            Scenario::Honest => vec![ServerBehaviour::Honest { price: DEFAULT_PRICE }],
            Scenario::PriceInflation => {
                vec![ServerBehaviour::PriceInflation { advertised: DEFAULT_PRICE, factor: 1000 }]
            }
            Scenario::PiiInstructing => {
                EntityType::ALL.iter().map(|&entity| ServerBehaviour::PiiInstructing { entity }).collect()
            }
            Scenario::ReplayEcho => vec![ServerBehaviour::ReplayEcho],
        }
    }
}

enum Failure {
    Usage(String),
    Operational(String),
}

impl Failure {
    fn op(e: impl std::fmt::Display) -> Self {
        Failure::Operational(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenCorpus { seed, n, pii_rate, out } => gen_corpus(seed, n, pii_rate, &out),
        Command::Sweep { corpus, out } => sweep(&corpus, &out),
        Command::VerifyAudit { log, key_file } => verify_audit(&log, &key_file),
        Command::Demo { scenario, policy_file, audit_log } => {
            demo(scenario, policy_file.as_deref(), audit_log.as_deref())
        }
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Operational(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn gen_corpus(seed: u64, n: usize, pii_rate: Option<f64>, out: &Path) -> Result<ExitCode, Failure> {
    let mut config = GeneratorConfig { seed, n, ..GeneratorConfig::default() };
    if let Some(rate) = pii_rate {
        config.pii_rate = rate;
    }
    let (samples, meta) = corpus::generate(&config).map_err(|e| Failure::Usage(e.to_string()))?;
    corpus::write_corpus(&samples, &meta, out).map_err(Failure::op)?;
    println!(
        "wrote {} samples ({} PII-positive, {} labels) to {}",
        meta.n_samples,
        meta.pii_positive_samples,
        meta.labels_total,
        out.display()
    );
    for (category, count) in &meta.category_counts {
        println!("  {category:<16} {count}");
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(corpus_path: &Path, out: &Path) -> Result<ExitCode, Failure> {
    let samples = corpus::load_corpus(corpus_path).map_err(Failure::op)?;
    if samples.is_empty() {
        return Err(Failure::Operational(format!("{}: corpus is empty", corpus_path.display())));
    }
    let report = eval::run_sweep(&samples).map_err(Failure::op)?;
    eval::write_report(&report, out).map_err(Failure::op)?;
    println!("{} configurations over {} samples in {:.1} s", report.rows.len(), report.n_samples, report.elapsed_secs);
    for (mode, threshold) in [(Mode::Pattern, None), (Mode::Contextual, Some(0.4))] {
        if let Some(row) = report.find(mode, &EntityType::ALL, threshold) {
            let m = &row.metrics.micro.scores;
            println!(
                "  {:<28} P {:.3}  R {:.3}  F1 {:.3}  p99 {:.4} ms",
                row.config.to_string(),
                m.precision,
                m.recall,
                m.f1,
                row.latency.p99_ms
            );
        }
    }
    println!("report written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn verify_audit(log: &Path, key_file: &Path) -> Result<ExitCode, Failure> {
    let key = fs::read(key_file).map_err(|e| Failure::op(format!("{}: {e}", key_file.display())))?;
    if key.is_empty() {
        return Err(Failure::Operational(format!("{}: key file is empty", key_file.display())));
    }
    let bytes = fs::read(log).map_err(|e| Failure::op(format!("{}: {e}", log.display())))?;
    let head_path = FileSink::head_path(log);
    let head: Option<ChainHead> = match fs::read(&head_path) {
        Ok(raw) => match serde_json::from_slice(&raw) {
            Ok(head) => Some(head),
            Err(e) => return Err(Failure::op(format!("{}: unreadable head: {e}", head_path.display()))),
        },
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(Failure::op(format!("{}: {e}", head_path.display()))),
    };
    let result = audit::verify_chain(&bytes, &key, head.as_ref());
    println!("{result}");
    Ok(match result {
        VerifyResult::Ok { .. } => ExitCode::SUCCESS,
        VerifyResult::Tampered { .. } => ExitCode::FAILURE,
    })
}

fn demo(scenario: Scenario, policy_file: Option<&Path>, audit_log: Option<&Path>) -> Result<ExitCode, Failure> {
    let mut options = HarnessOptions::default();
    if let Some(path) = policy_file {
        options.policy = PolicyConfig::load(path).map_err(|e| Failure::op(format!("{}: {e}", path.display())))?;
    }
    let mut failed = false;
    let mut audit_lines = Vec::new();
    for behaviour in scenario.behaviours() {
        let bed = Testbed::new(behaviour);
        let harness = bed.harness(options.clone());
        let context = AgentContext::new("Fetch the requested dataset", "scheduled agent task");
        let response = harness.client.request(&bed.url("/resource"), &context).map_err(Failure::op)?;
        let leaked: usize = behaviour
            .instructed_metadata()
            .map(|(_, _, surfaces)| surfaces.iter().map(|s| bed.facilitator.occurrences(s)).sum())
            .unwrap_or(0);
        let (status, redactions) = match &response.payment {
            Some(p) => (p.status.to_string(), p.redactions),
            None => ("NO_PAYMENT".to_string(), 0),
        };
        failed |= response.payment.as_ref().is_some_and(|p| p.status == Status::Error);
        println!(
            "{behaviour}: {status} http={} redactions={redactions} settlements={} leaked_surfaces={leaked}",
            response.status,
            bed.facilitator.settlement_count()
        );
        for line in harness.audit.lines() {
            // Audit events are written after redaction; only outcome and detail are shown.
            if let Ok(event) = serde_json::from_str::<x402_guard::AuditEvent>(&line) {
                let line = format!("  seq={} {} {}", event.seq, event.outcome, event.detail);
                println!("{}", line.trim_end());
            }
        }
        audit_lines.push((harness.audit.contents(), harness.audit.head()));
    }
    if let Some(path) = audit_log {
        let runs = audit_lines.len();
        for (i, (contents, head)) in audit_lines.into_iter().enumerate() {
            // Each run has its own chain; several runs get numbered files.
            let target = if runs == 1 { path.to_path_buf() } else { numbered(path, i + 1) };
            write_audit(&target, &contents, head.as_ref())
                .map_err(|e| Failure::op(format!("{}: {e}", target.display())))?;
            println!("audit log written to {}", target.display());
        }
    }
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn numbered(path: &Path, n: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{n}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{n}"),
    };
    path.with_file_name(name)
}

fn write_audit(path: &Path, contents: &[u8], head: Option<&ChainHead>) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    if let Some(head) = head {
        fs::write(FileSink::head_path(path), serde_json::to_vec(head).expect("head serialises"))?;
    }
    Ok(())
}
