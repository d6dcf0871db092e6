//! Multi-block runs: every algorithm re-anchors after each block, and the true
//! SINR of each visited anchor is scored on a common evaluation block.

use antijam_core::model::to_db;
use rayon::prelude::*;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{Result, SimError};
use crate::sweep::Row;
use crate::trial::{simulate, surrogate_sinr, trial_seed};

/// SINR of one algorithm at anchor `x_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPoint {
    pub block: usize,
    pub true_sinr_db: f64,
    pub surrogate_sinr_db: f64,
    /// Iterations of the optimization that produced `x_b` (0 for `b = 0`).
    pub iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algo: Algorithm,
    pub points: Vec<BlockPoint>,
}

impl Trajectory {
    /// Whether the true SINR never decreases from one anchor to the next.
    pub fn is_nondecreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].true_sinr_db >= w[0].true_sinr_db)
    }

    pub fn last(&self) -> &BlockPoint {
        self.points.last().expect("at least the start anchor")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimescaleRun {
    pub index: u64,
    pub seed: u64,
    /// True SINR of the fixed array, in dB.
    pub ula_sinr_db: f64,
    pub trajectories: Vec<Trajectory>,
}

impl TimescaleRun {
    pub fn get(&self, algo: Algorithm) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.algo == algo)
    }
}

/// Runs `cfg.trials` seeded multi-block trials with `blocks` blocks each.
pub fn run_two_timescale(cfg: &ExperimentConfig, blocks: usize) -> Result<Vec<TimescaleRun>> {
    if blocks == 0 {
        return Err(SimError::Config("need at least one block".into()));
    }
    let mut c = cfg.clone();
    c.block.blocks = blocks;
    c.validate()?;
    (0..c.trials as u64)
        .into_par_iter()
        .map(|index| {
            let seed = trial_seed(c.seed, index);
            let run = simulate(&c, seed, &c.algorithms)?;
            let sigma_s2 = run.scenario.sigma_s2();
            let ula = run.leg(Algorithm::Ula).expect("ULA leg always runs");
            let ula_sinr_db = to_db(run.true_sinr(ula.final_anchor())?);
            let mut trajectories = Vec::new();
            for leg in run.legs.iter().filter(|l| c.algorithms.contains(&l.algo)) {
                let mut points = Vec::with_capacity(blocks + 1);
                for (b, x) in leg.anchors.iter().enumerate() {
                    points.push(BlockPoint {
                        block: b,
                        true_sinr_db: to_db(run.true_sinr(x)?),
                        surrogate_sinr_db: to_db(surrogate_sinr(sigma_s2, leg.surrogate[b])),
                        iters: if b == 0 { 0 } else { leg.iterations[b - 1] },
                    });
                }
                trajectories.push(Trajectory {
                    algo: leg.algo,
                    points,
                });
            }
            Ok(TimescaleRun {
                index,
                seed,
                ula_sinr_db,
                trajectories,
            })
        })
        .collect()
}

/// Rows with `axis = "block"`, ordered by block, algorithm and trial. The
/// effectiveness flag compares with the fixed array.
pub fn rows(runs: &[TimescaleRun]) -> Vec<Row> {
    let mut algos: Vec<Algorithm> = runs
        .iter()
        .flat_map(|r| r.trajectories.iter().map(|t| t.algo))
        .collect();
    algos.sort();
    algos.dedup();
    let blocks = runs
        .first()
        .and_then(|r| r.trajectories.first())
        .map_or(0, |t| t.points.len());
    let mut out = Vec::new();
    for b in 0..blocks {
        for &algo in &algos {
            for run in runs {
                let Some(t) = run.get(algo) else { continue };
                let p = &t.points[b];
                let effective = algo != Algorithm::Ula && p.true_sinr_db > run.ula_sinr_db;
                out.push(Row {
                    axis: "block",
                    value: b as f64,
                    seed: run.seed,
                    algo,
                    true_sinr_db: p.true_sinr_db,
                    surrogate_sinr_db: p.surrogate_sinr_db,
                    effective,
                    iters: p.iters,
                    runtime_ms: 0.0,
                });
            }
        }
    }
    out
}
