//! Experiment configuration, read from TOML. Every field has a default; a
//! config file only needs the keys it changes.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use antijam_core::baselines::LineSearchConfig;
use antijam_core::geometry::GeometryConfig;
use antijam_core::model::SymbolLaw;
use antijam_core::trsolver::TrustRegionConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Position optimizers available to a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Fixed half-wavelength array at the initial anchor.
    Ula,
    Ptrso,
    Pgd,
    Pnm,
    /// Trust-region ascent on the mean of all block covariances so far.
    PtrsoHist,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Ula,
        Algorithm::Ptrso,
        Algorithm::Pgd,
        Algorithm::Pnm,
        Algorithm::PtrsoHist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ula => "ula",
            Algorithm::Ptrso => "ptrso",
            Algorithm::Pgd => "pgd",
            Algorithm::Pnm => "pnm",
            Algorithm::PtrsoHist => "ptrso-hist",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| SimError::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Parses a comma-separated roster such as `ula,ptrso,pgd`.
pub fn parse_roster(list: &str) -> Result<Vec<Algorithm>> {
    let mut out: Vec<Algorithm> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(SimError::Config("empty algorithm roster".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolDistribution {
    Gaussian,
    Qpsk,
}

impl From<SymbolDistribution> for SymbolLaw {
    fn from(d: SymbolDistribution) -> Self {
        match d {
            SymbolDistribution::Gaussian => SymbolLaw::Gaussian,
            SymbolDistribution::Qpsk => SymbolLaw::Qpsk,
        }
    }
}

/// Array geometry in wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub antennas: usize,
    pub spacing: f64,
    pub aperture: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            antennas: 8,
            spacing: 0.5,
            aperture: 8.0,
        }
    }
}

/// Random scenario law: `L` paths with `θ ~ U[0, π]`, `α ~ CN(0, 1/(2L))`,
/// `I` jammers with `φ ~ U[0, π]`, `ζ ~ CN(0, 1)`, `σ_i² = jsr·σ_s²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub wavelength: f64,
    pub paths: usize,
    pub jammers: usize,
    /// `σ_i²/σ_s²`.
    pub jammer_to_signal: f64,
    pub noise_power: f64,
    /// Operating SNR `σ_s²/σ_n²` in dB when SNR is not the swept axis.
    pub snr_db: f64,
    pub symbols: SymbolDistribution,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            wavelength: 1.0,
            paths: 8,
            jammers: 8,
            jammer_to_signal: 10.0,
            noise_power: 1.0,
            snr_db: 0.0,
            symbols: SymbolDistribution::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockSection {
    /// Snapshots per block `T`.
    pub snapshots: usize,
    /// Position updates per trial.
    pub blocks: usize,
    /// Diagonal loading added to every sample covariance.
    pub loading: f64,
}

impl Default for BlockSection {
    fn default() -> Self {
        Self {
            snapshots: 100,
            blocks: 1,
            loading: 0.0,
        }
    }
}

/// Trust-region settings; radii are in wavelengths and default to
/// `Δ₀ = λ/4`, `Δ_max = D_x/4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustRegionSection {
    pub initial_radius: Option<f64>,
    pub max_radius: Option<f64>,
    pub eta: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
    pub cg_forcing: f64,
    pub cg_max_iter: Option<usize>,
}

impl Default for TrustRegionSection {
    fn default() -> Self {
        let d = TrustRegionConfig::default();
        Self {
            initial_radius: None,
            max_radius: None,
            eta: d.eta,
            eta1: d.eta1,
            eta2: d.eta2,
            gamma1: d.gamma1,
            gamma2: d.gamma2,
            grad_tol: d.grad_tol,
            step_tol: d.step_tol,
            max_iter: d.max_iter,
            cg_forcing: d.cg_forcing,
            cg_max_iter: d.cg_max_iter,
        }
    }
}

/// Armijo settings for PGD and PNM; the initial step is in wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearchSection {
    pub armijo: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for LineSearchSection {
    fn default() -> Self {
        let d = LineSearchConfig::default();
        Self {
            armijo: d.armijo,
            backtrack: d.backtrack,
            initial_step: d.initial_step,
            max_backtracks: d.max_backtracks,
            grad_tol: d.grad_tol,
            step_tol: d.step_tol,
            max_iter: 100,
        }
    }
}

/// Values visited by each sweep subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub snr_db: Vec<f64>,
    pub antennas: Vec<usize>,
    pub snapshots: Vec<usize>,
    pub jammers: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_db: vec![-10.0, 0.0, 10.0],
            antennas: vec![4, 8, 12, 16],
            snapshots: vec![25, 50, 100, 200, 400],
            jammers: vec![2, 4, 8, 12],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimescaleSection {
    pub blocks: usize,
}

impl Default for TimescaleSection {
    fn default() -> Self {
        Self { blocks: 5 }
    }
}

/// Fixed scenario of the beampattern demo, angles in degrees from broadside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeampatternSection {
    pub path_angles_deg: Vec<f64>,
    pub jammer_angles_deg: Vec<f64>,
    /// Number of grid angles spanning `[−90°, 90°]`.
    pub grid_points: usize,
    pub trials: usize,
}

impl Default for BeampatternSection {
    fn default() -> Self {
        Self {
            path_angles_deg: vec![-25.0, 0.0, 30.0, 50.0],
            jammer_angles_deg: vec![-60.0, -40.0, -10.0, 75.0],
            grid_points: 361,
            trials: 100,
        }
    }
}

/// Sample sizes of the theory suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheorySection {
    pub steering_draws: usize,
    pub covariance_scenarios: usize,
    pub covariance_pairs: usize,
    pub perturbation_draws: usize,
    pub perturbation_dim: usize,
    pub concentration_snapshots: Vec<usize>,
    pub concentration_trials: usize,
    pub bias_instances: usize,
    pub bias_samples_per_radius: usize,
    pub bias_sampled_snapshots: usize,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self {
            steering_draws: 10_000,
            covariance_scenarios: 10,
            covariance_pairs: 1000,
            perturbation_draws: 10_000,
            perturbation_dim: 4,
            concentration_snapshots: vec![25, 100, 400, 1600],
            concentration_trials: 200,
            bias_instances: 500,
            bias_samples_per_radius: 4,
            bias_sampled_snapshots: 1000,
        }
    }
}

/// Complete description of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    /// Record per-algorithm wall time in the output (makes tables non-reproducible).
    pub timing: bool,
    pub algorithms: Vec<Algorithm>,
    pub geometry: GeometrySection,
    pub scenario: ScenarioSection,
    pub block: BlockSection,
    pub trust_region: TrustRegionSection,
    pub line_search: LineSearchSection,
    pub sweep: SweepSection,
    pub two_timescale: TimescaleSection,
    pub beampattern: BeampatternSection,
    pub theory: TheorySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            trials: 500,
            timing: false,
            algorithms: Algorithm::ALL.to_vec(),
            geometry: GeometrySection::default(),
            scenario: ScenarioSection::default(),
            block: BlockSection::default(),
            trust_region: TrustRegionSection::default(),
            line_search: LineSearchSection::default(),
            sweep: SweepSection::default(),
            two_timescale: TimescaleSection::default(),
            beampattern: BeampatternSection::default(),
            theory: TheorySection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::Config(m.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.algorithms.is_empty() {
            return bad("algorithm roster is empty");
        }
        if self.sweep.snr_db.is_empty() {
            return bad("SNR list is empty");
        }
        if self.block.blocks == 0 || self.block.snapshots == 0 {
            return bad("need at least one block of at least one snapshot");
        }
        if !(self.scenario.wavelength > 0.0 && self.scenario.noise_power > 0.0) {
            return bad("wavelength and noise power must be positive");
        }
        if self.scenario.paths == 0 {
            return bad("need at least one desired path");
        }
        if !(self.block.loading >= 0.0) {
            return bad("loading must be nonnegative");
        }
        self.geometry_config()?;
        self.trust_region_config()?.validate()?;
        self.line_search_config().validate()?;
        Ok(())
    }

    pub fn geometry_config(&self) -> Result<GeometryConfig> {
        let lambda = self.scenario.wavelength;
        Ok(GeometryConfig::new(
            self.geometry.antennas,
            self.geometry.spacing * lambda,
            self.geometry.aperture * lambda,
        )?)
    }

    pub fn trust_region_config(&self) -> Result<TrustRegionConfig> {
        let lambda = self.scenario.wavelength;
        let t = &self.trust_region;
        let base = TrustRegionConfig::for_geometry(lambda, &self.geometry_config()?);
        Ok(TrustRegionConfig {
            initial_radius: t.initial_radius.map_or(base.initial_radius, |r| r * lambda),
            max_radius: t.max_radius.map_or(base.max_radius, |r| r * lambda),
            eta: t.eta,
            eta1: t.eta1,
            eta2: t.eta2,
            gamma1: t.gamma1,
            gamma2: t.gamma2,
            grad_tol: t.grad_tol,
            step_tol: t.step_tol,
            max_iter: t.max_iter,
            cg_forcing: t.cg_forcing,
            cg_max_iter: t.cg_max_iter,
        })
    }

    pub fn line_search_config(&self) -> LineSearchConfig {
        let l = &self.line_search;
        LineSearchConfig {
            armijo: l.armijo,
            backtrack: l.backtrack,
            initial_step: l.initial_step * self.scenario.wavelength,
            max_backtracks: l.max_backtracks,
            grad_tol: l.grad_tol,
            step_tol: l.step_tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = ExperimentConfig::from_toml("trials = 7\n[block]\nsnapshots = 25\n").unwrap();
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.block.snapshots, 25);
        assert_eq!(cfg.geometry.antennas, 8);
    }

    #[test]
    fn rejects_unknown_keys_and_empty_values() {
        assert!(ExperimentConfig::from_toml("trails = 3").is_err());
        assert!(ExperimentConfig::from_toml("trials = 0").is_err());
        assert!(ExperimentConfig::from_toml("[sweep]\nsnr_db = []").is_err());
    }

    #[test]
    fn roster_parsing() {
        assert_eq!(
            parse_roster("pgd, ula,ptrso,pgd").unwrap(),
            vec![Algorithm::Ula, Algorithm::Ptrso, Algorithm::Pgd]
        );
        assert!(parse_roster("ula,bogus").is_err());
        assert!(parse_roster("").is_err());
    }

    #[test]
    fn derived_solver_settings() {
        let cfg = ExperimentConfig::default();
        let tr = cfg.trust_region_config().unwrap();
        assert_eq!((tr.initial_radius, tr.max_radius), (0.25, 2.0));
        assert_eq!((tr.eta1, tr.eta2, tr.gamma1, tr.gamma2), (0.25, 0.75, 0.25, 2.0));
        assert_eq!(tr.grad_tol, 1e-6);
        assert_eq!(cfg.line_search_config().initial_step, 1.0);
    }
}
