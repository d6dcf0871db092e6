//! One Monte Carlo trial: a scenario draw, `B` blocks of position updates per
//! algorithm under common random numbers, and a final evaluation block.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use antijam_core::baselines::{
    historical_average_covariance, pgd, projected_newton, LineSearchConfig,
};
use antijam_core::geometry::{ula, Apv, GeometryConfig};
use antijam_core::model::{
    desired_channel, mvdr_weights, output_sinr, sample_covariance_with_fallback, to_db,
    BeamformerWeights, DesiredPaths, FactorizedCovariance, JammerSet, ScenarioConfig,
    SnapshotBlock, SymbolBlock, SymbolLaw,
};
use antijam_core::objective::SurrogateContext;
use antijam_core::trsolver::{ptrso, TrustRegionConfig};
use antijam_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::Result;

/// Surrogate SINRs are reported up to this linear value (60 dB).
pub const SURROGATE_SINR_CAP: f64 = 1e6;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index`; depends only on the master seed and the index.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Random stream `stream` of a trial. Stream 0 draws the scenario, stream
/// `b + 1` the symbols of block `b`, stream `B + 1` the evaluation block.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn cn<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let sd = (variance / 2.0).sqrt();
    C64::new(
        sd * rng.sample::<f64, _>(StandardNormal),
        sd * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Draws a scenario from the configured law. The draw order (path angles,
/// path gains, jammer angles, jammer gains) does not depend on the SNR, so
/// sweeping SNR keeps the geometry of each trial fixed.
pub fn draw_scenario<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<ScenarioConfig> {
    let sc = &cfg.scenario;
    let l = sc.paths;
    let angles = (0..l).map(|_| rng.random::<f64>() * PI).collect();
    let gains = (0..l).map(|_| cn(rng, 1.0 / (2.0 * l as f64))).collect();
    let paths = DesiredPaths::new(angles, gains)?;
    let ji = sc.jammers;
    let ja = (0..ji).map(|_| rng.random::<f64>() * PI).collect();
    let jg = (0..ji).map(|_| cn(rng, 1.0)).collect();
    let sigma_s2 = sc.noise_power * 10f64.powf(sc.snr_db / 10.0);
    let jammers = JammerSet::new(ja, jg, vec![sc.jammer_to_signal * sigma_s2; ji])?;
    Ok(ScenarioConfig::new(sc.wavelength, sigma_s2, sc.noise_power, paths, jammers)?)
}

/// `σ_s²ĝ/(1 − σ_s²ĝ)`, the MVDR output SINR implied by `ĝ = h0ᴴR̂⁻¹h0`
/// when `R̂` contains the desired signal, capped at [`SURROGATE_SINR_CAP`].
pub fn surrogate_sinr(sigma_s2: f64, ghat: f64) -> f64 {
    let p = sigma_s2 * ghat;
    if p <= 0.0 {
        return 0.0;
    }
    (p / (1.0 - p).max(p / SURROGATE_SINR_CAP)).min(SURROGATE_SINR_CAP)
}

/// The path of one algorithm through the blocks of a trial.
#[derive(Debug, Clone)]
pub struct Leg {
    pub algo: Algorithm,
    /// `x_0, …, x_B`.
    pub anchors: Vec<Apv>,
    /// Surrogate value at each anchor: entry 0 under block 0's covariance,
    /// entry `b ≥ 1` the final value of the optimization in block `b − 1`.
    pub surrogate: Vec<f64>,
    /// Optimizer iterations per block.
    pub iterations: Vec<usize>,
    pub elapsed: Duration,
}

impl Leg {
    pub fn final_anchor(&self) -> &Apv {
        self.anchors.last().expect("at least the start anchor")
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }
}

/// Everything a trial produced before SINR evaluation.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub geometry: GeometryConfig,
    pub legs: Vec<Leg>,
    pub evaluation: SymbolBlock,
    law: SymbolLaw,
    loading: f64,
}

impl TrialRun {
    /// MVDR weights at `x` from the evaluation block collected there.
    pub fn evaluation_weights(&self, x: &Apv) -> Result<BeamformerWeights> {
        let s = &self.scenario;
        let block = SnapshotBlock::new(self.evaluation.received(x, s)?, x.clone(), usize::MAX)?;
        let cov = sample_covariance_with_fallback(&block, self.loading)?;
        Ok(mvdr_weights(&cov, &desired_channel(x, s.paths(), s.wavenumber()))?)
    }

    /// True output SINR (linear) at `x` with evaluation-block MVDR weights.
    pub fn true_sinr(&self, x: &Apv) -> Result<f64> {
        Ok(output_sinr(&self.evaluation_weights(x)?, x, &self.scenario)?)
    }

    pub fn leg(&self, algo: Algorithm) -> Option<&Leg> {
        self.legs.iter().find(|l| l.algo == algo)
    }

    pub fn symbol_law(&self) -> SymbolLaw {
        self.law
    }
}

struct Solvers {
    geometry: GeometryConfig,
    tr: TrustRegionConfig,
    ls: LineSearchConfig,
    ls_iter: usize,
}

/// Advances one leg by one block and returns the new anchor, its surrogate
/// value and the iteration count.
fn step_leg(
    algo: Algorithm,
    anchor: &Apv,
    cov: FactorizedCovariance,
    history: &mut Vec<FactorizedCovariance>,
    s: &ScenarioConfig,
    sv: &Solvers,
) -> Result<(Apv, f64, usize)> {
    let k = s.wavenumber();
    let ctx = |c| SurrogateContext::new(anchor.clone(), c, s.paths().clone(), k);
    Ok(match algo {
        Algorithm::Ula => {
            let c = ctx(cov)?;
            (anchor.clone(), c.value(anchor), 0)
        }
        Algorithm::Ptrso => {
            let out = ptrso(anchor, &ctx(cov)?, &sv.geometry, &sv.tr)?;
            let v = *out.state.values.last().expect("start value");
            let it = out.iterations();
            (out.x, v, it)
        }
        Algorithm::PtrsoHist => {
            history.push(cov);
            let avg = historical_average_covariance(history)?;
            let out = ptrso(anchor, &ctx(avg)?, &sv.geometry, &sv.tr)?;
            let v = *out.state.values.last().expect("start value");
            let it = out.iterations();
            (out.x, v, it)
        }
        Algorithm::Pgd | Algorithm::Pnm => {
            let c = ctx(cov)?;
            let out = if algo == Algorithm::Pgd {
                pgd(anchor, &c, &sv.geometry, &sv.ls, sv.ls_iter)?
            } else {
                projected_newton(anchor, &c, &sv.geometry, &sv.ls, sv.ls_iter)?
            };
            let v = *out.values.last().expect("start value");
            let it = out.iterations();
            (out.x, v, it)
        }
    })
}

/// Runs the legs of `roster` (the ULA leg is always included) for the trial
/// with the given seed.
pub fn simulate(cfg: &ExperimentConfig, seed: u64, roster: &[Algorithm]) -> Result<TrialRun> {
    let scenario = draw_scenario(cfg, &mut trial_rng(seed, 0))?;
    simulate_scenario(cfg, seed, roster, scenario)
}

/// As [`simulate`] with a given scenario instead of a random draw.
pub fn simulate_scenario(
    cfg: &ExperimentConfig,
    seed: u64,
    roster: &[Algorithm],
    scenario: ScenarioConfig,
) -> Result<TrialRun> {
    let sv = Solvers {
        geometry: cfg.geometry_config()?,
        tr: cfg.trust_region_config()?,
        ls: cfg.line_search_config(),
        ls_iter: cfg.line_search.max_iter,
    };
    let law: SymbolLaw = cfg.scenario.symbols.into();
    let n = sv.geometry.antennas();
    let t = cfg.block.snapshots;
    let blocks = cfg.block.blocks;
    let loading = cfg.block.loading;

    let mut algos: Vec<Algorithm> = roster.to_vec();
    algos.push(Algorithm::Ula);
    algos.sort();
    algos.dedup();

    let x0 = ula(&sv.geometry);
    let mut legs: Vec<Leg> = algos
        .iter()
        .map(|&algo| Leg {
            algo,
            anchors: vec![x0.clone()],
            surrogate: Vec::with_capacity(blocks + 1),
            iterations: Vec::with_capacity(blocks),
            elapsed: Duration::ZERO,
        })
        .collect();
    let mut histories: Vec<Vec<FactorizedCovariance>> = vec![Vec::new(); legs.len()];

    for b in 0..blocks {
        let symbols = SymbolBlock::draw(n, &scenario, t, law, &mut trial_rng(seed, b as u64 + 1))?;
        for (leg, history) in legs.iter_mut().zip(histories.iter_mut()) {
            let start = Instant::now();
            let anchor = leg.final_anchor().clone();
            let block = SnapshotBlock::new(symbols.received(&anchor, &scenario)?, anchor.clone(), b)?;
            let cov = sample_covariance_with_fallback(&block, loading)?;
            if b == 0 {
                let h0 = desired_channel(&anchor, scenario.paths(), scenario.wavenumber());
                leg.surrogate.push(cov.inverse_quadratic_form(&h0));
            }
            let (next, value, iters) = step_leg(leg.algo, &anchor, cov, history, &scenario, &sv)?;
            leg.anchors.push(next);
            leg.surrogate.push(value);
            leg.iterations.push(iters);
            leg.elapsed += start.elapsed();
        }
    }
    let evaluation = SymbolBlock::draw(n, &scenario, t, law, &mut trial_rng(seed, blocks as u64 + 1))?;
    Ok(TrialRun {
        seed,
        scenario,
        geometry: sv.geometry,
        legs,
        evaluation,
        law,
        loading,
    })
}

/// Per-algorithm outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgoRecord {
    pub algo: Algorithm,
    pub true_sinr_db: f64,
    pub surrogate_sinr_db: f64,
    /// True SINR strictly above the ULA's.
    pub effective: bool,
    pub iters: usize,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: u64,
    pub seed: u64,
    pub records: Vec<AlgoRecord>,
}

impl TrialRecord {
    pub fn get(&self, algo: Algorithm) -> Option<&AlgoRecord> {
        self.records.iter().find(|r| r.algo == algo)
    }
}

/// Runs trial `index` of `cfg` and evaluates each roster algorithm's final
/// position.
pub fn run_trial(cfg: &ExperimentConfig, index: u64) -> Result<TrialRecord> {
    let seed = trial_seed(cfg.seed, index);
    let run = simulate(cfg, seed, &cfg.algorithms)?;
    let sigma_s2 = run.scenario.sigma_s2();
    let ula_leg = run.leg(Algorithm::Ula).expect("ULA leg always runs");
    let ula_sinr = run.true_sinr(ula_leg.final_anchor())?;
    let mut records = Vec::with_capacity(cfg.algorithms.len());
    for leg in run.legs.iter().filter(|l| cfg.algorithms.contains(&l.algo)) {
        let sinr = if leg.algo == Algorithm::Ula {
            ula_sinr
        } else {
            run.true_sinr(leg.final_anchor())?
        };
        let ghat = *leg.surrogate.last().expect("surrogate value");
        records.push(AlgoRecord {
            algo: leg.algo,
            true_sinr_db: to_db(sinr),
            surrogate_sinr_db: to_db(surrogate_sinr(sigma_s2, ghat)),
            effective: leg.algo != Algorithm::Ula && sinr > ula_sinr,
            iters: leg.total_iterations(),
            runtime_ms: if cfg.timing {
                leg.elapsed.as_secs_f64() * 1e3
            } else {
                0.0
            },
        });
    }
    Ok(TrialRecord {
        index,
        seed,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(trial_seed(1, 0), trial_seed(1, 0));
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
    }

    #[test]
    fn surrogate_sinr_matches_identity_and_caps() {
        // a = hᴴR_in⁻¹h = 3, σ_s² = 2: ĝ = a/(1 + σ_s² a) = 3/7, SINR = 6.
        let v = surrogate_sinr(2.0, 3.0 / 7.0);
        assert!((v - 6.0).abs() < 1e-12);
        assert_eq!(surrogate_sinr(1.0, 2.0), SURROGATE_SINR_CAP);
        assert_eq!(surrogate_sinr(1.0, 1.0), SURROGATE_SINR_CAP);
        assert_eq!(surrogate_sinr(1.0, 0.0), 0.0);
    }
}
