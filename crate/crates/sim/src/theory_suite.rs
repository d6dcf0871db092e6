//! Runs every bound check of `antijam_core::theory` and collects a
//! machine-readable report.

use antijam_core::geometry::{random_feasible, ula};
use antijam_core::model::SymbolLaw;
use antijam_core::stats::{loglog_slope, spearman};
use antijam_core::theory::{
    check_covariance_lipschitz, check_inverse_perturbation, check_steering_lipschitz,
    concentration_curve, geometric_bias_check, surrogate_gap_profile, BiasCovariances,
    BiasVerdict, BoundCheck,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::trial::{draw_scenario, trial_rng, trial_seed};

/// Accepted band for the log-log slope of the concentration curve.
pub const SLOPE_BAND: (f64, f64) = (-0.65, -0.35);
/// Minimum pass fraction of the bias check with sampled covariances.
pub const SAMPLED_BIAS_RATE: f64 = 0.95;
/// Minimum rank correlation between displacement and mean surrogate gap.
pub const GAP_SPEARMAN: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    /// Hard checks are one-sided bounds that must never be violated.
    pub hard: bool,
    pub samples: usize,
    pub failures: usize,
    pub passed: bool,
    pub metric_name: &'static str,
    pub metric: f64,
}

impl CheckReport {
    fn bound(name: &'static str, c: BoundCheck) -> Self {
        Self {
            name,
            hard: true,
            samples: c.trials,
            failures: c.violations,
            passed: c.passed(),
            metric_name: "max_excess",
            metric: c.max_slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub seed: u64,
    pub checks: Vec<CheckReport>,
    /// `(T, mean ‖R̂ − R‖)` points of the concentration curve.
    pub concentration: Vec<(usize, f64)>,
    /// Mean surrogate gap at each displacement (wavelengths).
    pub gap_profile: Vec<(f64, f64)>,
    /// Bias instances in which `μI ⪯ R ⪯ ΛI` held at every covariance evaluated.
    pub bias_spectral_bounds_held: usize,
}

impl TheoryReport {
    pub fn hard_bounds_hold(&self) -> bool {
        self.checks.iter().filter(|c| c.hard).all(|c| c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct BiasTally {
    checked: usize,
    passed: usize,
    unmet: usize,
    bounds: usize,
    min_margin: f64,
}

fn bias_tally(cfg: &ExperimentConfig, which: BiasCovariances, stream: u64) -> Result<BiasTally> {
    let th = &cfg.theory;
    let g = cfg.geometry_config()?;
    let results = (0..th.bias_instances as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(trial_seed(cfg.seed, i), stream);
            let s = draw_scenario(cfg, &mut rng)?;
            let x_star = random_feasible(&g, &mut rng);
            let anchors = vec![random_feasible(&g, &mut rng), random_feasible(&g, &mut rng), x_star.clone()];
            Ok(geometric_bias_check(&x_star, &anchors, &s, th.bias_samples_per_radius, which, &mut rng)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = BiasTally {
        checked: 0,
        passed: 0,
        unmet: 0,
        bounds: 0,
        min_margin: f64::INFINITY,
    };
    for r in results {
        match r.verdict {
            BiasVerdict::PreconditionUnmet => t.unmet += 1,
            BiasVerdict::Checked {
                min_margin,
                spectral_bounds_hold,
                ..
            } => {
                t.checked += 1;
                t.passed += r.verdict.all_passed() as usize;
                t.bounds += spectral_bounds_hold as usize;
                t.min_margin = t.min_margin.min(min_margin);
            }
        }
    }
    Ok(t)
}

/// Runs all checks with the sample sizes of `cfg.theory` on scenarios drawn
/// from `cfg.scenario`.
pub fn run_theory_suite(cfg: &ExperimentConfig) -> Result<TheoryReport> {
    let th = &cfg.theory;
    let g = cfg.geometry_config()?;
    let n = g.antennas();
    let mut checks = Vec::new();

    let mut rng = trial_rng(cfg.seed, 101);
    checks.push(CheckReport::bound(
        "steering_lipschitz",
        check_steering_lipschitz(th.steering_draws, &mut rng),
    ));

    let mut rng = trial_rng(cfg.seed, 102);
    let mut cov = BoundCheck {
        trials: 0,
        violations: 0,
        max_slack: f64::NEG_INFINITY,
    };
    for _ in 0..th.covariance_scenarios {
        let s = draw_scenario(cfg, &mut rng)?;
        let c = check_covariance_lipschitz(&s, n, g.aperture(), th.covariance_pairs, &mut rng);
        cov.trials += c.trials;
        cov.violations += c.violations;
        cov.max_slack = cov.max_slack.max(c.max_slack);
    }
    checks.push(CheckReport::bound("covariance_lipschitz", cov));

    let mut rng = trial_rng(cfg.seed, 103);
    let (lower, upper) = check_inverse_perturbation(th.perturbation_dim, th.perturbation_draws, &mut rng)?;
    checks.push(CheckReport::bound("inverse_perturbation_lower", lower));
    checks.push(CheckReport::bound("inverse_difference_upper", upper));

    let mut rng = trial_rng(cfg.seed, 104);
    let s = draw_scenario(cfg, &mut rng)?;
    let x0 = ula(&g);
    let concentration = concentration_curve(
        &s,
        &x0,
        &th.concentration_snapshots,
        th.concentration_trials,
        SymbolLaw::Gaussian,
        &mut rng,
    )?;
    let pts: Vec<(f64, f64)> = concentration.iter().map(|&(t, e)| (t as f64, e)).collect();
    let slope = loglog_slope(&pts);
    let decreasing = concentration.windows(2).all(|w| w[1].1 < w[0].1);
    checks.push(CheckReport {
        name: "concentration_slope",
        hard: false,
        samples: th.concentration_trials * concentration.len(),
        failures: 0,
        passed: decreasing && (SLOPE_BAND.0..=SLOPE_BAND.1).contains(&slope),
        metric_name: "loglog_slope",
        metric: slope,
    });

    let t_grid = [0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8].map(|t| t * cfg.scenario.wavelength);
    let gap = surrogate_gap_profile(&s, &x0, 8, &t_grid, cfg.block.snapshots, 40, &mut rng)?;
    let rho = spearman(&t_grid, &gap);
    checks.push(CheckReport {
        name: "surrogate_gap_monotone",
        hard: false,
        samples: 8 * 40,
        failures: 0,
        passed: rho > GAP_SPEARMAN,
        metric_name: "spearman",
        metric: rho,
    });

    let tb = bias_tally(cfg, BiasCovariances::True, 105)?;
    checks.push(CheckReport {
        name: "geometric_bias_true",
        hard: true,
        samples: tb.checked,
        failures: tb.checked - tb.passed,
        passed: tb.checked > 0 && tb.passed == tb.checked,
        metric_name: "min_margin",
        metric: tb.min_margin,
    });
    let sb = bias_tally(cfg, BiasCovariances::Sampled(th.bias_sampled_snapshots), 106)?;
    let rate = if sb.checked > 0 {
        sb.passed as f64 / sb.checked as f64
    } else {
        0.0
    };
    checks.push(CheckReport {
        name: "geometric_bias_sampled",
        hard: false,
        samples: sb.checked,
        failures: sb.checked - sb.passed,
        passed: rate >= SAMPLED_BIAS_RATE,
        metric_name: "pass_rate",
        metric: rate,
    });
    if tb.unmet + sb.unmet > 0 {
        checks.push(CheckReport {
            name: "geometric_bias_precondition",
            hard: false,
            samples: 2 * th.bias_instances,
            failures: tb.unmet + sb.unmet,
            passed: false,
            metric_name: "unmet",
            metric: (tb.unmet + sb.unmet) as f64,
        });
    }

    Ok(TheoryReport {
        seed: cfg.seed,
        checks,
        concentration,
        gap_profile: t_grid.iter().cloned().zip(gap).collect(),
        bias_spectral_bounds_held: tb.bounds,
    })
}
