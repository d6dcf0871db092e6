//! Averaged receive beampatterns on a fixed multipath/jammer scenario.

use antijam_core::model::{beampattern, DesiredPaths, JammerSet, ScenarioConfig};
use antijam_core::C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{Result, SimError};
use crate::trial::{simulate_scenario, trial_seed};

/// One grid angle of one algorithm's averaged pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternRow {
    pub algo: Algorithm,
    pub angle_deg: f64,
    /// Peak-normalized magnitude in dB.
    pub magnitude_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beampatterns {
    pub grid_deg: Vec<f64>,
    /// `(algorithm, pattern in dB)` in roster order.
    pub patterns: Vec<(Algorithm, Vec<f64>)>,
    pub jammer_angles_deg: Vec<f64>,
}

/// Evenly spaced angles from −90° to 90° inclusive.
pub fn angle_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| -90.0 + 180.0 * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// The demo scenario: equal-gain paths `1/√L` at the configured angles, unit
/// jammer gains with power `jsr·σ_s²`.
pub fn demo_scenario(cfg: &ExperimentConfig) -> Result<ScenarioConfig> {
    let b = &cfg.beampattern;
    let sc = &cfg.scenario;
    let l = b.path_angles_deg.len();
    if l == 0 {
        return Err(SimError::Config("beampattern needs at least one path".into()));
    }
    let paths = DesiredPaths::new(
        b.path_angles_deg.iter().map(|d| d.to_radians()).collect(),
        vec![C64::new(1.0 / (l as f64).sqrt(), 0.0); l],
    )?;
    let sigma_s2 = sc.noise_power * 10f64.powf(sc.snr_db / 10.0);
    let ji = b.jammer_angles_deg.len();
    let jammers = JammerSet::new(
        b.jammer_angles_deg.iter().map(|d| d.to_radians()).collect(),
        vec![C64::new(1.0, 0.0); ji],
        vec![sc.jammer_to_signal * sigma_s2; ji],
    )?;
    Ok(ScenarioConfig::new(sc.wavelength, sigma_s2, sc.noise_power, paths, jammers)?)
}

/// Runs `cfg.beampattern.trials` seeded trials on the demo scenario and
/// averages each algorithm's peak-normalized power pattern, renormalized to a
/// 0 dB peak.
pub fn run_beampattern_demo(cfg: &ExperimentConfig) -> Result<Beampatterns> {
    let b = &cfg.beampattern;
    if b.trials == 0 || b.grid_points < 2 {
        return Err(SimError::Config("beampattern needs trials and at least two grid points".into()));
    }
    let scenario = demo_scenario(cfg)?;
    let grid_deg = angle_grid(b.grid_points);
    let grid: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    let k = scenario.wavenumber();
    let mut roster = cfg.algorithms.clone();
    roster.sort();
    let per_trial: Vec<Vec<Vec<f64>>> = (0..b.trials as u64)
        .into_par_iter()
        .map(|i| {
            let run = simulate_scenario(cfg, trial_seed(cfg.seed, i), &roster, scenario.clone())?;
            roster
                .iter()
                .map(|&a| {
                    let x = run.leg(a).expect("roster leg").final_anchor();
                    let w = run.evaluation_weights(x)?;
                    let db = beampattern(&w, x, &grid, k)?;
                    Ok(db.iter().map(|v| 10f64.powf(v / 10.0)).collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut patterns = Vec::with_capacity(roster.len());
    for (ai, &algo) in roster.iter().enumerate() {
        let mut acc = vec![0.0; grid.len()];
        for t in &per_trial {
            for (a, v) in acc.iter_mut().zip(&t[ai]) {
                *a += v;
            }
        }
        let peak = acc.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
        patterns.push((algo, acc.iter().map(|v| 10.0 * (v / peak).log10()).collect()));
    }
    Ok(Beampatterns {
        grid_deg,
        patterns,
        jammer_angles_deg: b.jammer_angles_deg.clone(),
    })
}

impl Beampatterns {
    pub fn rows(&self) -> Vec<PatternRow> {
        let mut out = Vec::new();
        for (algo, p) in &self.patterns {
            for (&angle_deg, &magnitude_db) in self.grid_deg.iter().zip(p) {
                out.push(PatternRow {
                    algo: *algo,
                    angle_deg,
                    magnitude_db,
                });
            }
        }
        out
    }

    pub fn pattern(&self, algo: Algorithm) -> Option<&[f64]> {
        self.patterns.iter().find(|(a, _)| *a == algo).map(|(_, p)| p.as_slice())
    }

    /// Pattern level at the grid angle nearest each jammer.
    pub fn null_depths(&self, algo: Algorithm) -> Option<Vec<f64>> {
        let p = self.pattern(algo)?;
        Some(
            self.jammer_angles_deg
                .iter()
                .map(|&phi| {
                    let i = self
                        .grid_deg
                        .iter()
                        .enumerate()
                        .min_by(|a, b| (a.1 - phi).abs().total_cmp(&(b.1 - phi).abs()))
                        .map(|(i, _)| i)
                        .expect("nonempty grid");
                    p[i]
                })
                .collect(),
        )
    }
}
