//! Experiment driver: stream → sketch → exact-oracle comparison → report.
//!
//! [`run_experiment`] runs `trials` independent seeded replays of one
//! algorithm over one generated stream, each in lockstep with a
//! [`WindowOracle`], and aggregates the per-trial verdicts into a
//! [`Report`]. Trials run in parallel (capped by `SWNLA_THREADS`); a single
//! trial is sequential, so reports are replay-stable.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use swnla_core::cov::CovSketch;
use swnla_core::l1::L1Sliding;
use swnla_core::online::OnlineLra;
use swnla_core::pcp::PcpSampler;
use swnla_core::rng::{self, domain};
use swnla_core::sampler::{RowSampler, SamplerConfig};
use swnla_core::spectral::SpectralHistogram;

use crate::gen::{self, Generator, StreamSpec};
use crate::oracle::{oracle_metrics, MetricKind, WindowOracle};
use crate::report::{Report, StepMetrics, SCHEMA_VERSION};
use crate::{Error, Result};

/// Which sketch to run.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Deterministic Gram chain; one-sided `(1−ε)` sandwich every step.
    SpectralDet,
    /// Ridge-score row sample; two-sided `(1±ε)` Gram bound at query time.
    SpectralSample,
    /// Projection-cost-preserving row sample at a fixed rank.
    Pcp,
    /// Irrevocable whole-stream low-rank sample (window = stream length).
    OnlineLra,
    /// Sliding-window ℓ1 row sample for integer streams.
    L1,
    /// Sliding-window covariance row sample; `words` or `bits` mode.
    Cov,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::SpectralDet => "spectral-det",
            Algorithm::SpectralSample => "spectral-sample",
            Algorithm::Pcp => "pcp",
            Algorithm::OnlineLra => "online-lra",
            Algorithm::L1 => "l1",
            Algorithm::Cov => "cov",
        }
    }

    /// Fraction of trials that must pass. The deterministic chain admits no
    /// failures; covariance is a constant-probability (per-seed ≥ 2/3)
    /// guarantee; the rest are high-probability.
    pub fn default_min_success(&self) -> f64 {
        match self {
            Algorithm::SpectralDet => 1.0,
            Algorithm::Cov => 2.0 / 3.0,
            _ => 0.9,
        }
    }
}

fn default_eps() -> f64 {
    0.25
}
fn default_rank() -> usize {
    2
}
fn default_trials() -> usize {
    1
}
fn default_batch() -> usize {
    1
}

/// Full experiment description; serializable so runs can be replayed from
/// a config file.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub stream: StreamSpec,
    /// Sketch accuracy target.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Rank for the projection-cost algorithms.
    #[serde(default = "default_rank")]
    pub rank: usize,
    /// Evaluate oracle metrics every `batch` steps (the final step is
    /// always evaluated).
    #[serde(default = "default_batch")]
    pub batch: usize,
    /// Independent replays with seeds `seed, seed+1, …`.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Algorithm-specific variant: `words`/`bits` for `cov`, `c1`/`c2`
    /// for `l1`.
    #[serde(default)]
    pub mode: Option<String>,
    /// Overrides the per-algorithm success-rate threshold.
    #[serde(default)]
    pub min_success: Option<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid("eps must be in (0,1)"));
        }
        if self.trials == 0 || self.batch == 0 {
            return Err(Error::invalid("trials and batch must be ≥ 1"));
        }
        match (self.algorithm, self.mode.as_deref()) {
            (Algorithm::Cov, None | Some("words") | Some("bits")) => {}
            (Algorithm::L1, None | Some("c1") | Some("c2")) => {}
            (_, None) => {}
            (a, Some(m)) => {
                return Err(Error::invalid(format!(
                    "mode {m:?} is not valid for algorithm {}",
                    a.name()
                )));
            }
        }
        Ok(())
    }

    fn min_success(&self) -> f64 {
        self.min_success.unwrap_or_else(|| self.algorithm.default_min_success())
    }

    /// Integer-entry exponent for the ℓ1 sketch: explicit mode wins, else
    /// inherited from an integer-bounded generator, else 1.
    fn l1_c_exp(&self) -> u32 {
        match self.mode.as_deref() {
            Some("c2") => 2,
            Some("c1") => 1,
            _ => match self.stream.generator {
                Generator::IntegerBounded { c_exp } => c_exp,
                _ => 1,
            },
        }
    }
}

/// Trial-parallelism cap from `SWNLA_THREADS` (unset or invalid → library
/// default).
pub fn thread_cap() -> Option<usize> {
    std::env::var("SWNLA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n >= 1)
}

/// One trial's outcome.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub steps: Vec<StepMetrics>,
    /// The trial-level verdict: every step for the deterministic chain,
    /// the final evaluated step for the sampled algorithms.
    pub ok: bool,
}

impl TrialOutcome {
    fn worst_error(&self) -> f64 {
        self.steps.iter().map(|s| s.error).fold(0.0, f64::max)
    }

    fn final_rows(&self) -> u64 {
        self.steps.last().map(|s| s.rows_stored).unwrap_or(0)
    }
}

/// Run all trials over generated streams and aggregate. Exit-code
/// semantics live in the caller: the run "passes" when the trial success
/// rate reaches the threshold.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run_parallel(cfg, None)
}

/// Same driver over explicit rows (file-based streams): every trial sees
/// the same rows, only the sketch seed varies.
pub fn run_experiment_on_rows(cfg: &ExperimentConfig, rows: &[Vec<f64>]) -> Result<Report> {
    run_parallel(cfg, Some(rows))
}

fn run_parallel(cfg: &ExperimentConfig, fixed: Option<&[Vec<f64>]>) -> Result<Report> {
    cfg.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap().unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<TrialOutcome>> = pool.install(|| {
        use rayon::prelude::*;
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = cfg.stream.seed.wrapping_add(trial as u64);
                match fixed {
                    Some(rows) => run_trial(cfg, rows, seed),
                    None => {
                        let spec = StreamSpec { seed, ..cfg.stream.clone() };
                        run_trial(cfg, &gen::generate(&spec)?, seed)
                    }
                }
            })
            .collect()
    });
    let mut trials = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        trials.push(o?);
    }

    let passes = trials.iter().filter(|t| t.ok).count();
    let success_rate = passes as f64 / trials.len() as f64;
    let worst = trials.iter().map(TrialOutcome::worst_error).fold(0.0, f64::max);
    let mean_rows =
        trials.iter().map(|t| t.final_rows() as f64).sum::<f64>() / trials.len() as f64;
    let mut aggregate = BTreeMap::new();
    aggregate.insert("trials".into(), trials.len() as f64);
    aggregate.insert("success_rate".into(), success_rate);
    aggregate.insert("worst_error".into(), worst);
    aggregate.insert("mean_final_rows".into(), mean_rows);
    aggregate.insert("wall_ms_total".into(), started.elapsed().as_secs_f64() * 1e3);

    Ok(Report {
        schema: SCHEMA_VERSION,
        algorithm: cfg.algorithm.name().into(),
        config: serde_json::to_value(cfg)?,
        seed: cfg.stream.seed,
        steps: trials.into_iter().next().map(|t| t.steps).unwrap_or_default(),
        aggregate,
        passed: success_rate >= cfg.min_success() - 1e-12,
    })
}

/// Deterministic ±1/0 probe directions for the ℓ1 comparison.
fn l1_probes(seed: u64, dim: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|j| {
            (0..dim)
                .map(|i| {
                    let u = rng::unit(seed, domain::GENERATE, 10_000 + j as u64, i as u64);
                    if u < 1.0 / 3.0 {
                        -1.0
                    } else if u < 2.0 / 3.0 {
                        0.0
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Run one algorithm over explicit rows, in lockstep with the exact
/// oracle. Public so the CLI can feed file-based streams through the same
/// path as generated ones.
pub fn run_trial(cfg: &ExperimentConfig, rows: &[Vec<f64>], seed: u64) -> Result<TrialOutcome> {
    let dim = cfg.stream.dim;
    let window = cfg.stream.window;
    let eps = cfg.eps;
    // The online sampler has whole-stream semantics; its reference window
    // is the entire stream.
    let oracle_window = match cfg.algorithm {
        Algorithm::OnlineLra => rows.len().max(1),
        _ => window,
    };
    let mut oracle = WindowOracle::new(dim, oracle_window)?;

    enum Sketch {
        Det(SpectralHistogram),
        Sample(RowSampler),
        Pcp(PcpSampler),
        Online(OnlineLra),
        L1(L1Sliding),
        Cov(CovSketch),
    }
    let mut sketch = match cfg.algorithm {
        Algorithm::SpectralDet => Sketch::Det(SpectralHistogram::new(dim, window, eps)?),
        Algorithm::SpectralSample => {
            Sketch::Sample(RowSampler::new(SamplerConfig::new(dim, window, eps, seed)?))
        }
        Algorithm::Pcp => Sketch::Pcp(PcpSampler::new(dim, window, cfg.rank, eps, seed)?),
        Algorithm::OnlineLra => {
            let alpha = ((rows.len().max(2) as f64).ln()
                / (dim.max(2) as f64).ln())
            .max(1.0);
            Sketch::Online(OnlineLra::new(dim, cfg.rank, eps, alpha, seed)?)
        }
        Algorithm::L1 => Sketch::L1(L1Sliding::new(dim, window, eps, cfg.l1_c_exp(), seed)?),
        Algorithm::Cov => Sketch::Cov(match cfg.mode.as_deref() {
            Some("bits") => CovSketch::new_bits(dim, window, eps, seed)?,
            _ => CovSketch::new(dim, window, eps, seed)?,
        }),
    };
    let probes = match cfg.algorithm {
        Algorithm::L1 => l1_probes(seed, dim, 8),
        _ => Vec::new(),
    };

    let mut steps = Vec::new();
    for (t, row) in rows.iter().enumerate() {
        let clock = Instant::now();
        oracle.push(row)?;
        let ti = t as i64;
        match &mut sketch {
            Sketch::Det(s) => s.ingest(row, ti)?,
            Sketch::Sample(s) => s.ingest(row, ti)?,
            Sketch::Pcp(s) => s.ingest(row, ti)?,
            Sketch::Online(s) => s.ingest(row, ti)?,
            Sketch::L1(s) => s.ingest(row, ti)?,
            Sketch::Cov(s) => s.ingest(row, ti)?,
        }
        let last = t + 1 == rows.len();
        if !last && (t + 1) % cfg.batch != 0 {
            continue;
        }
        let (out, stored, kind) = match &mut sketch {
            Sketch::Det(s) => {
                let (g, _) = s.query();
                (g, s.chain_len(), MetricKind::Spectral { eps, deterministic: true })
            }
            Sketch::Sample(s) => {
                let m = s.sketch();
                let stored = s.rows().len();
                (m, stored, MetricKind::Spectral { eps, deterministic: false })
            }
            Sketch::Pcp(s) => {
                let m = s.sample();
                let stored = s.rows().len();
                (m, stored, MetricKind::Pcp { rank: cfg.rank, eps, probes: 8, seed })
            }
            Sketch::Online(s) => {
                let m = s.result();
                let stored = s.kept().len();
                (m, stored, MetricKind::Online { rank: cfg.rank, eps, probes: 8, seed })
            }
            Sketch::L1(s) => {
                let m = s.query()?;
                let stored = m.rows();
                (m, stored, MetricKind::L1 { eps, probes: probes.clone() })
            }
            Sketch::Cov(s) => {
                let m = s.query();
                let stored = m.rows();
                (m, stored, MetricKind::Cov { eps })
            }
        };
        let metrics = oracle_metrics(&oracle, &out, &kind)?;
        steps.push(StepMetrics {
            t: t as u64,
            error: metrics.error,
            rows_stored: stored as u64,
            ok: metrics.ok,
            wall_ns: clock.elapsed().as_nanos() as u64,
        });
    }

    // Deterministic chain: every evaluated step must pass. Sampled
    // algorithms promise accuracy at any one query point with high
    // probability; the trial is judged at the final query.
    let ok = match cfg.algorithm {
        Algorithm::SpectralDet => steps.iter().all(|s| s.ok),
        _ => steps.last().map(|s| s.ok).unwrap_or(true),
    };
    Ok(TrialOutcome { steps, ok })
}
