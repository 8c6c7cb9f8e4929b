//! Single-threaded throughput and latency measurement of the operators.

use std::time::{Duration, Instant};

use keepaug_core::keepmix::PairingIndex;
use keepaug_core::sampler::{apply_operator, AugOperator, Sampler};
use keepaug_core::{AugPolicy, Error, Result, Sample};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Throughput {
    pub metric: &'static str,
    pub name: String,
    /// Samples the operator actually produced.
    pub samples: u64,
    /// KeepMix anchors without an eligible partner.
    pub skipped: u64,
    pub pixels: u64,
    pub seconds: f64,
    pub megapixels_per_second: f64,
}

impl Throughput {
    fn new(name: impl Into<String>, samples: u64, skipped: u64, pixels: u64, elapsed: Duration) -> Self {
        let seconds = elapsed.as_secs_f64();
        Self {
            metric: "throughput",
            name: name.into(),
            samples,
            skipped,
            pixels,
            seconds,
            megapixels_per_second: megapixels_per_second(pixels, seconds),
        }
    }
}

pub fn megapixels_per_second(pixels: u64, seconds: f64) -> f64 {
    if pixels == 0 || seconds <= 0.0 {
        0.0
    } else {
        pixels as f64 / seconds / 1e6
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Latency {
    pub metric: &'static str,
    pub name: String,
    pub samples: u64,
    pub p50_us: f64,
    pub p95_us: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub operators: Vec<Throughput>,
    pub end_to_end: Throughput,
    pub latency: Latency,
}

impl BenchReport {
    /// One JSON object per line.
    pub fn json_lines(&self) -> Vec<String> {
        self.operators
            .iter()
            .chain(std::iter::once(&self.end_to_end))
            .map(|t| serde_json::to_string(t).expect("serializable"))
            .chain(std::iter::once(
                serde_json::to_string(&self.latency).expect("serializable"),
            ))
            .collect()
    }
}

/// Nearest-rank percentile of sorted data; 0 for empty input.
pub fn percentile(sorted: &[Duration], q: f64) -> Duration {
    if sorted.is_empty() {
        return Duration::ZERO;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Applies `op` to `iterations` anchors, cycling through the dataset; the
/// cycle number is used as the epoch so repeated anchors draw fresh streams.
pub fn measure_operator(
    dataset: &[Sample],
    pairing: &PairingIndex,
    op: &AugOperator,
    iterations: u64,
    seed: u64,
) -> Result<Throughput> {
    let n = dataset.len() as u64;
    if n == 0 && iterations > 0 {
        return Err(Error::EmptyDataset);
    }
    let (mut samples, mut skipped, mut pixels) = (0u64, 0u64, 0u64);
    let start = Instant::now();
    for i in 0..iterations {
        let anchor = (i % n) as usize;
        match apply_operator(dataset, pairing, anchor, op, i / n, seed) {
            Ok(out) => {
                samples += 1;
                pixels += out.image().len() as u64;
                std::hint::black_box(out);
            }
            Err(Error::NoEligiblePartner { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(Throughput::new(op.provenance().as_str(), samples, skipped, pixels, start.elapsed()))
}

pub fn run_bench(dataset: &[Sample], policy: &AugPolicy, iterations: u64, seed: u64) -> Result<BenchReport> {
    let sampler = Sampler::new(dataset, policy.clone(), seed)?;
    let operators = policy
        .operators()
        .iter()
        .map(|op| measure_operator(dataset, sampler.pairing(), op, iterations, seed))
        .collect::<Result<Vec<_>>>()?;

    let n = dataset.len() as u64;
    let mut latencies = Vec::with_capacity(iterations as usize);
    let (mut pixels, mut degraded) = (0u64, 0u64);
    let start = Instant::now();
    for i in 0..iterations {
        let t0 = Instant::now();
        let plan = sampler.plan_item((i % n) as usize, i / n);
        let item = sampler.execute(&plan, i / n)?;
        latencies.push(t0.elapsed());
        pixels += item.sample.image().len() as u64;
        degraded += u64::from(item.degraded);
        std::hint::black_box(item);
    }
    let elapsed = start.elapsed();
    latencies.sort_unstable();
    let us = |d: Duration| d.as_secs_f64() * 1e6;
    Ok(BenchReport {
        operators,
        end_to_end: Throughput::new("end_to_end", iterations, degraded, pixels, elapsed),
        latency: Latency {
            metric: "latency",
            name: "end_to_end".into(),
            samples: iterations,
            p50_us: us(percentile(&latencies, 0.50)),
            p95_us: us(percentile(&latencies, 0.95)),
        },
    })
}
