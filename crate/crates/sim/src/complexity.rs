//! Wall-clock cost per iteration of PTRSO and PNM as the array grows.

use std::time::{Duration, Instant};

use antijam_core::baselines::projected_newton;
use antijam_core::geometry::ula;
use antijam_core::model::{generate_snapshots, sample_covariance_with_fallback};
use antijam_core::objective::SurrogateContext;
use antijam_core::stats::loglog_slope;
use antijam_core::trsolver::ptrso;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Result, SimError};
use crate::trial::{draw_scenario, trial_rng, trial_seed};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub antennas: usize,
    pub ptrso_iterations: usize,
    pub ptrso_secs_per_iter: f64,
    pub pnm_iterations: usize,
    pub pnm_secs_per_iter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Fitted exponent `p` of `time per iteration ∝ N_r^p`.
    pub ptrso_exponent: f64,
    pub pnm_exponent: f64,
}

/// Times both optimizers on `instances` random scenarios per array size. The
/// aperture scales as `N_r` wavelengths so the spacing constraints stay
/// comparable, and each size keeps sampling until at least `min_time` has
/// been spent in each optimizer.
pub fn measure_scaling(
    cfg: &ExperimentConfig,
    antennas: &[usize],
    instances: usize,
    min_time: Duration,
) -> Result<ScalingReport> {
    if antennas.len() < 2 || instances == 0 {
        return Err(SimError::Config("need two array sizes and one instance".into()));
    }
    let mut points = Vec::with_capacity(antennas.len());
    for &n in antennas {
        let mut c = cfg.clone();
        c.geometry.antennas = n;
        c.geometry.aperture = n as f64;
        c.block.snapshots = c.block.snapshots.max(2 * n);
        c.validate()?;
        let g = c.geometry_config()?;
        let tr = c.trust_region_config()?;
        let ls = c.line_search_config();
        let x0 = ula(&g);
        let (mut t_tr, mut t_pnm) = (Duration::ZERO, Duration::ZERO);
        let (mut it_tr, mut it_pnm) = (0, 0);
        let mut i = 0u64;
        while i < instances as u64 || t_tr < min_time || t_pnm < min_time {
            let mut rng = trial_rng(trial_seed(c.seed, i), 7);
            let s = draw_scenario(&c, &mut rng)?;
            let b = generate_snapshots(&x0, &s, c.block.snapshots, c.scenario.symbols.into(), 0, &mut rng)?;
            let cov = sample_covariance_with_fallback(&b, c.block.loading)?;
            let ctx = SurrogateContext::new(x0.clone(), cov, s.paths().clone(), s.wavenumber())?;

            let start = Instant::now();
            let out = ptrso(&x0, &ctx, &g, &tr)?;
            t_tr += start.elapsed();
            it_tr += out.iterations();

            let start = Instant::now();
            let out = projected_newton(&x0, &ctx, &g, &ls, c.line_search.max_iter)?;
            t_pnm += start.elapsed();
            it_pnm += out.iterations();
            i += 1;
        }
        points.push(ScalingPoint {
            antennas: n,
            ptrso_iterations: it_tr,
            ptrso_secs_per_iter: t_tr.as_secs_f64() / it_tr.max(1) as f64,
            pnm_iterations: it_pnm,
            pnm_secs_per_iter: t_pnm.as_secs_f64() / it_pnm.max(1) as f64,
        });
    }
    let fit = |f: fn(&ScalingPoint) -> f64| {
        loglog_slope(&points.iter().map(|p| (p.antennas as f64, f(p))).collect::<Vec<_>>())
    };
    Ok(ScalingReport {
        ptrso_exponent: fit(|p| p.ptrso_secs_per_iter),
        pnm_exponent: fit(|p| p.pnm_secs_per_iter),
        points,
    })
}
