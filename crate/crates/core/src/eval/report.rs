use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{EntityMetrics, SweepReport, SweepRow};
use crate::pii::{EntityType, Mode};

pub const JSON_REPORT: &str = "sweep_report.json";
pub const MARKDOWN_REPORT: &str = "sweep_report.md";

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct ReportError {
    pub path: PathBuf,
    pub source: io::Error,
}

/// Write `sweep_report.json` and `sweep_report.md` into `dir`, creating it.
pub fn write_report(report: &SweepReport, dir: &Path) -> Result<(), ReportError> {
    let wrap = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError { path, source }
    };
    fs::create_dir_all(dir).map_err(wrap(dir))?;
    let json = dir.join(JSON_REPORT);
    let mut text = serde_json::to_string_pretty(report).expect("report serialises");
    text.push('\n');
    fs::write(&json, text).map_err(wrap(&json))?;
    let md = dir.join(MARKDOWN_REPORT);
    fs::write(&md, render_markdown(report)).map_err(wrap(&md))
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

fn prf(m: &EntityMetrics) -> String {
    format!("{} | {} | {}", f3(m.scores.precision), f3(m.scores.recall), f3(m.scores.f1))
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Pattern => "PATTERN",
        Mode::Contextual => "CONTEXTUAL",
    }
}

pub fn render_markdown(report: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Detector sweep\n");
    let _ = writeln!(
        out,
        "Corpus: {} samples, {} gold labels. {} configurations plus one derived row, {:.1} s.\n",
        report.n_samples,
        report.n_labels,
        report.rows.len(),
        report.elapsed_secs
    );

    let pattern = report.find(Mode::Pattern, &EntityType::ALL, None);
    let contextual = report.find(Mode::Contextual, &EntityType::ALL, Some(0.4));
    if let (Some(p), Some(c)) = (pattern, contextual) {
        let _ = writeln!(out, "## All entity types\n");
        let _ = writeln!(
            out,
            "| Entity | Pattern P | Pattern R | Pattern F1 | Contextual@0.4 P | Contextual@0.4 R | Contextual@0.4 F1 |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|");
        for e in EntityType::ALL {
            let _ = writeln!(out, "| {e} | {} | {} |", prf(&p.metrics.entity(e)), prf(&c.metrics.entity(e)));
        }
        let _ = writeln!(out, "| Micro | {} | {} |", prf(&p.metrics.micro), prf(&c.metrics.micro));
        let _ = writeln!(
            out,
            "| p50 / p99 (ms) | {:.4} / {:.4} | | | {:.4} / {:.4} | | |\n",
            p.latency.p50_ms, p.latency.p99_ms, c.latency.p50_ms, c.latency.p99_ms
        );
    }

    let _ = writeln!(out, "## Threshold sensitivity (contextual, all entity types)\n");
    let _ = writeln!(out, "| min_score | Micro P | Micro R | Micro F1 | PHONE R | PERSON R | p99 (ms) |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    for row in report.rows.iter().filter(|r| r.config.mode == Mode::Contextual && r.config.entities.len() == 6) {
        let m = &row.metrics;
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.4} |",
            row.config.min_score.map_or("-".into(), |t| format!("{t:.1}")),
            prf(&m.micro),
            f3(m.entity(EntityType::PhoneNumber).scores.recall),
            f3(m.entity(EntityType::Person).scores.recall),
            row.latency.p99_ms
        );
    }

    let t = &report.top_three;
    let _ = writeln!(out, "\n## Three-type subset\n");
    let _ = writeln!(
        out,
        "{} at contextual 0.4: micro recall {} ({} of full-set recall); true positives {} of the full set.\n",
        t.row.config.subset_label(),
        f3(t.row.metrics.micro.scores.recall),
        f3(t.recall_ratio),
        f3(t.tp_share)
    );

    let _ = writeln!(out, "## All configurations\n");
    let _ = writeln!(out, "| # | Mode | Entities | min_score | TP | FP | FN | P | R | F1 | p99 (ms) |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|---|---|");
    for (i, row) in report.rows.iter().enumerate() {
        let _ = writeln!(out, "{}", table_row(i + 1, row));
    }
    out
}

fn table_row(n: usize, row: &SweepRow) -> String {
    let c = row.metrics.micro.counts;
    format!(
        "| {n} | {} | {} | {} | {} | {} | {} | {} | {:.4} |",
        mode_name(row.config.mode),
        row.config.subset_label(),
        row.config.min_score.map_or("-".into(), |t| format!("{t:.1}")),
        c.tp,
        c.fp,
        c.fn_,
        prf(&row.metrics.micro),
        row.latency.p99_ms
    )
}
