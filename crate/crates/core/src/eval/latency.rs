//! Per-call analysis latency.

use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::pii::PiiAnalyzer;

pub const WARMUP_CALLS: usize = 50;
pub const TIMED_CALLS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub n_warmup: usize,
    pub n_timed: usize,
}

/// Nearest-rank percentile of an ascending slice.
pub fn nearest_rank(sorted: &[Duration], percentile: f64) -> Duration {
    assert!(!sorted.is_empty(), "no measurements");
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn summarise(mut timings: Vec<Duration>, n_warmup: usize) -> LatencyStats {
    timings.sort();
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    LatencyStats {
        p50_ms: ms(nearest_rank(&timings, 50.0)),
        p95_ms: ms(nearest_rank(&timings, 95.0)),
        p99_ms: ms(nearest_rank(&timings, 99.0)),
        max_ms: ms(*timings.last().expect("nonempty")),
        n_warmup,
        n_timed: timings.len(),
    }
}

/// Time `call` over `texts` (cycled): discard the warmup calls, keep the
/// timed ones. `now` is the time source.
pub fn time_calls<C, N>(texts: &[&str], mut call: C, mut now: N) -> LatencyStats
where
    C: FnMut(&str),
    N: FnMut() -> Instant,
{
    assert!(!texts.is_empty(), "latency needs sample texts");
    let mut cycle = texts.iter().cycle();
    for _ in 0..WARMUP_CALLS {
        call(cycle.next().expect("cycled"));
    }
    let timings = (0..TIMED_CALLS)
        .map(|_| {
            let text = cycle.next().expect("cycled");
            let start = now();
            call(text);
            now() - start
        })
        .collect();
    summarise(timings, WARMUP_CALLS)
}

pub fn measure_latency<A: PiiAnalyzer + ?Sized>(analyzer: &A, texts: &[&str]) -> LatencyStats {
    time_calls(
        texts,
        |t| {
            black_box(analyzer.analyze(black_box(t)).ok());
        },
        Instant::now,
    )
}
