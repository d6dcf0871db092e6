//! Monte Carlo sweeps over SNR, array size, block length and jammer count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{Result, SimError};
use crate::trial::{run_trial, TrialRecord};

/// Resamples used for every bootstrap band.
pub const BOOTSTRAP_RESAMPLES: usize = 2000;
const BOOTSTRAP_SEED: u64 = 0x5eed_b007;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Snr,
    Antennas,
    Snapshots,
    Jammers,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Snr => "snr",
            Axis::Antennas => "nr",
            Axis::Snapshots => "t",
            Axis::Jammers => "i",
        }
    }

    /// Configured values of this axis.
    pub fn values(self, cfg: &ExperimentConfig) -> Vec<f64> {
        let s = &cfg.sweep;
        match self {
            Axis::Snr => s.snr_db.clone(),
            Axis::Antennas => s.antennas.iter().map(|&v| v as f64).collect(),
            Axis::Snapshots => s.snapshots.iter().map(|&v| v as f64).collect(),
            Axis::Jammers => s.jammers.iter().map(|&v| v as f64).collect(),
        }
    }

    /// `cfg` with this axis set to `value`.
    pub fn apply(self, cfg: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(SimError::Config(format!("{} must be a whole number, got {value}", self.name())))
            }
        };
        let mut c = cfg.clone();
        match self {
            Axis::Snr => c.scenario.snr_db = value,
            Axis::Antennas => c.geometry.antennas = count()?,
            Axis::Snapshots => c.block.snapshots = count()?,
            Axis::Jammers => c.scenario.jammers = count()?,
        }
        c.validate()?;
        Ok(c)
    }
}

/// All trials at one axis value, in trial-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
}

/// One CSV row per (axis value, algorithm, trial).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub axis: &'static str,
    pub value: f64,
    pub seed: u64,
    pub algo: Algorithm,
    pub true_sinr_db: f64,
    pub surrogate_sinr_db: f64,
    pub effective: bool,
    pub iters: usize,
    pub runtime_ms: f64,
}

/// Aggregate over the trials of one (axis value, algorithm) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub axis: &'static str,
    pub value: f64,
    pub algo: Algorithm,
    pub trials: usize,
    pub mean_true_sinr_db: f64,
    pub ci_low_db: f64,
    pub ci_high_db: f64,
    pub mean_surrogate_sinr_db: f64,
    pub effectiveness: f64,
    pub mean_iters: f64,
}

/// Paired comparison of consecutive axis values for one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendStep {
    pub algo: Algorithm,
    pub from: f64,
    pub to: f64,
    /// Mean over trials of `SINR(to) − SINR(from)` in dB.
    pub mean_diff_db: f64,
    pub ci_low_db: f64,
    pub ci_high_db: f64,
    /// The expected direction is not contradicted by the 95% band.
    pub consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Nondecreasing,
    Nonincreasing,
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Percentile bootstrap 95% interval of the mean of `v`.
pub fn bootstrap_mean_ci(v: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = v.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| v[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (at(0.025), at(0.975))
}

/// Runs every trial at every value of `axis`. Trial `i` uses the same seed at
/// every value, so consecutive values can be compared pairwise.
pub fn run_sweep(cfg: &ExperimentConfig, axis: Axis, values: &[f64]) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(SimError::Config(format!("no values to sweep for {}", axis.name())));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let c = axis.apply(cfg, value)?;
        let trials = (0..c.trials as u64)
            .into_par_iter()
            .map(|i| run_trial(&c, i))
            .collect::<Result<Vec<_>>>()?;
        points.push(SweepPoint { value, trials });
    }
    Ok(SweepResult { axis, points })
}

impl SweepResult {
    pub fn algorithms(&self) -> Vec<Algorithm> {
        let mut a: Vec<Algorithm> = self
            .points
            .iter()
            .flat_map(|p| p.trials.iter().flat_map(|t| t.records.iter().map(|r| r.algo)))
            .collect();
        a.sort();
        a.dedup();
        a
    }

    pub fn point(&self, value: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.value == value)
    }

    /// Per-trial true SINRs (dB) of `algo` at `value`, in trial order.
    pub fn true_sinr(&self, value: f64, algo: Algorithm) -> Vec<f64> {
        self.point(value)
            .map(|p| {
                p.trials
                    .iter()
                    .filter_map(|t| t.get(algo).map(|r| r.true_sinr_db))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Rows ordered by axis value, then algorithm, then trial index.
    pub fn rows(&self) -> Vec<Row> {
        let mut out = Vec::new();
        for p in &self.points {
            for algo in self.algorithms() {
                for t in &p.trials {
                    if let Some(r) = t.get(algo) {
                        out.push(Row {
                            axis: self.axis.name(),
                            value: p.value,
                            seed: t.seed,
                            algo,
                            true_sinr_db: r.true_sinr_db,
                            surrogate_sinr_db: r.surrogate_sinr_db,
                            effective: r.effective,
                            iters: r.iters,
                            runtime_ms: r.runtime_ms,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn summaries(&self) -> Vec<Summary> {
        let mut out = Vec::new();
        for p in &self.points {
            for algo in self.algorithms() {
                let recs: Vec<_> = p.trials.iter().filter_map(|t| t.get(algo)).collect();
                if recs.is_empty() {
                    continue;
                }
                let sinr: Vec<f64> = recs.iter().map(|r| r.true_sinr_db).collect();
                let sur: Vec<f64> = recs.iter().map(|r| r.surrogate_sinr_db).collect();
                let (lo, hi) = bootstrap_mean_ci(&sinr, BOOTSTRAP_RESAMPLES, BOOTSTRAP_SEED);
                out.push(Summary {
                    axis: self.axis.name(),
                    value: p.value,
                    algo,
                    trials: recs.len(),
                    mean_true_sinr_db: mean(&sinr),
                    ci_low_db: lo,
                    ci_high_db: hi,
                    mean_surrogate_sinr_db: mean(&sur),
                    effectiveness: recs.iter().filter(|r| r.effective).count() as f64 / recs.len() as f64,
                    mean_iters: recs.iter().map(|r| r.iters as f64).sum::<f64>() / recs.len() as f64,
                });
            }
        }
        out
    }

    /// Paired bootstrap test of a monotone trend between consecutive values.
    pub fn trend(&self, algo: Algorithm, direction: Direction) -> Vec<TrendStep> {
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let a = self.true_sinr(w[0].value, algo);
            let b = self.true_sinr(w[1].value, algo);
            let diffs: Vec<f64> = b.iter().zip(&a).map(|(y, x)| y - x).collect();
            if diffs.is_empty() {
                continue;
            }
            let (lo, hi) = bootstrap_mean_ci(&diffs, BOOTSTRAP_RESAMPLES, BOOTSTRAP_SEED);
            out.push(TrendStep {
                algo,
                from: w[0].value,
                to: w[1].value,
                mean_diff_db: mean(&diffs),
                ci_low_db: lo,
                ci_high_db: hi,
                consistent: match direction {
                    Direction::Nondecreasing => hi >= 0.0,
                    Direction::Nonincreasing => lo <= 0.0,
                },
            });
        }
        out
    }
}

/// Writes serializable records as CSV with a header row.
pub fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// CSV bytes of `rows`.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(buf)
}
