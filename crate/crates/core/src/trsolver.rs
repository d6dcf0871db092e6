//! Projected trust-region ascent on the block surrogate.
//!
//! Each iteration maximizes the local quadratic model inside a ball with
//! truncated conjugate gradients, projects the trial point back onto the
//! feasible set, and adapts the radius from the ratio of realized to predicted
//! gain along the projected step.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{is_feasible, project, Apv, GeometryConfig};
use crate::linalg::RVector;
use crate::model::{
    desired_channel, mvdr_weights, sample_covariance_with_fallback, BeamformerWeights,
    FactorizedCovariance, ScenarioConfig, SnapshotBlock, SymbolBlock, SymbolLaw,
};
use crate::objective::{Objective, PointModel, SurrogateContext};

/// Parameters of the projected trust-region method.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionConfig {
    /// Initial radius Δ₀.
    pub initial_radius: f64,
    /// Radius cap Δ_max.
    pub max_radius: f64,
    /// Acceptance threshold η.
    pub eta: f64,
    /// Shrink threshold η₁.
    pub eta1: f64,
    /// Growth threshold η₂.
    pub eta2: f64,
    /// Shrink factor γ₁.
    pub gamma1: f64,
    /// Growth factor γ₂.
    pub gamma2: f64,
    /// Gradient-norm tolerance ε₁.
    pub grad_tol: f64,
    /// Step and radius tolerance ε₂.
    pub step_tol: f64,
    /// Outer iteration cap K_max.
    pub max_iter: usize,
    /// CG stops once the residual falls below `min(cg_forcing, √‖g‖)·‖g‖`.
    pub cg_forcing: f64,
    /// CG iteration cap; `None` means `2·N_r`.
    pub cg_max_iter: Option<usize>,
}

impl Default for TrustRegionConfig {
    /// Settings for a unit wavelength and an 8-wavelength aperture.
    fn default() -> Self {
        Self {
            initial_radius: 0.25,
            max_radius: 2.0,
            eta: 0.0,
            eta1: 0.25,
            eta2: 0.75,
            gamma1: 0.25,
            gamma2: 2.0,
            grad_tol: 1e-6,
            step_tol: 1e-6,
            max_iter: 100,
            cg_forcing: 0.5,
            cg_max_iter: None,
        }
    }
}

impl TrustRegionConfig {
    /// Default thresholds with Δ₀ = λ/4 and Δ_max = D_x/4.
    pub fn for_geometry(wavelength: f64, g: &GeometryConfig) -> Self {
        let max_radius = g.aperture() / 4.0;
        Self {
            initial_radius: (wavelength / 4.0).min(max_radius),
            max_radius,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.eta && self.eta < self.eta1 && self.eta1 < self.eta2 && self.eta2 < 1.0) {
            return Err(Error::InvalidConfig("need 0 ≤ η < η₁ < η₂ < 1"));
        }
        if !(self.gamma1 > 0.0 && self.gamma1 < 1.0) {
            return Err(Error::InvalidConfig("need 0 < γ₁ < 1"));
        }
        if !(self.gamma2 > 1.0) {
            return Err(Error::InvalidConfig("need γ₂ > 1"));
        }
        if !(self.initial_radius > 0.0 && self.initial_radius <= self.max_radius) {
            return Err(Error::InvalidConfig("need 0 < Δ₀ ≤ Δ_max"));
        }
        if !(self.grad_tol >= 0.0 && self.step_tol >= 0.0 && self.cg_forcing > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be nonnegative"));
        }
        Ok(())
    }
}

/// Why the truncated CG loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgTermination {
    /// Gradient was zero; no step.
    Stationary,
    /// Residual fell below tolerance inside the ball.
    Converged,
    /// Nonnegative model curvature along a search direction; followed to the boundary.
    NegativeCurvature,
    /// The next iterate would leave the ball; truncated on the boundary.
    Boundary,
    MaxIterations,
}

/// Step returned by [`steihaug_cg`].
#[derive(Debug, Clone, PartialEq)]
pub struct SteihaugStep {
    pub step: RVector,
    pub termination: CgTermination,
    pub iterations: usize,
}

/// Largest `τ ≥ 0` with `‖z + τ d‖ = Δ`.
fn boundary_tau(z: &RVector, d: &RVector, radius: f64) -> f64 {
    let a = d.norm_squared();
    let b = 2.0 * z.dot(d);
    let c = z.norm_squared() - radius * radius;
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let sq = libm::sqrt(disc);
    // Stable root of the larger sign.
    if b >= 0.0 {
        let q = -0.5 * (b + sq);
        if q != 0.0 { c / q } else { 0.0 }
    } else {
        (-b + sq) / (2.0 * a)
    }
}

/// Approximately maximizes `q(p) = gᵀp + ½pᵀHp` over `‖p‖ ≤ Δ` by truncated CG
/// on the minimization of `−q`.
pub fn steihaug_cg<F>(grad: &RVector, mut hvp: F, radius: f64, tol: f64, max_iter: usize) -> SteihaugStep
where
    F: FnMut(&RVector) -> RVector,
{
    let n = grad.len();
    let mut z = RVector::zeros(n);
    if grad.norm() == 0.0 {
        return SteihaugStep {
            step: z,
            termination: CgTermination::Stationary,
            iterations: 0,
        };
    }
    // Residual of the minimization problem: r = −g − H z.
    let mut r = -grad;
    let mut d = grad.clone();
    let mut rr = r.norm_squared();
    for it in 0..max_iter {
        // Curvature of −q along d.
        let bd = -hvp(&d);
        let curv = d.dot(&bd);
        if curv <= 0.0 {
            let tau = boundary_tau(&z, &d, radius);
            return SteihaugStep {
                step: z + d * tau,
                termination: CgTermination::NegativeCurvature,
                iterations: it + 1,
            };
        }
        let alpha = rr / curv;
        let z_next = &z + &d * alpha;
        if z_next.norm() >= radius {
            let tau = boundary_tau(&z, &d, radius);
            return SteihaugStep {
                step: z + d * tau,
                termination: CgTermination::Boundary,
                iterations: it + 1,
            };
        }
        z = z_next;
        r += &bd * alpha;
        let rr_next = r.norm_squared();
        if libm::sqrt(rr_next) < tol {
            return SteihaugStep {
                step: z,
                termination: CgTermination::Converged,
                iterations: it + 1,
            };
        }
        let beta = rr_next / rr;
        rr = rr_next;
        d = -&r + d * beta;
    }
    SteihaugStep {
        step: z,
        termination: CgTermination::MaxIterations,
        iterations: max_iter,
    }
}

/// Best model point along the gradient within the ball.
pub fn cauchy_point<F>(grad: &RVector, hvp: F, radius: f64) -> RVector
where
    F: FnOnce(&RVector) -> RVector,
{
    let gn = grad.norm();
    if gn == 0.0 {
        return RVector::zeros(grad.len());
    }
    let curv = -grad.dot(&hvp(grad));
    let tau = if curv <= 0.0 {
        1.0
    } else {
        (gn * gn * gn / (radius * curv)).min(1.0)
    };
    grad * (tau * radius / gn)
}

/// Predicted and realized gains of a candidate step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvaluation {
    /// `q(d) − q(0)`.
    pub pred: f64,
    /// `ĝ(x + d) − ĝ(x)`.
    pub ared: f64,
    /// `ared / pred`, or `None` when `pred ≤ 0` and the step must be rejected.
    pub ratio: Option<f64>,
}

/// Compares the model and surrogate gains along `d` from `x`.
pub fn evaluate_step<O: Objective, P: PointModel>(x: &[f64], d: &RVector, obj: &O, model: &P) -> StepEvaluation {
    let pred = model.gradient().dot(d) + 0.5 * d.dot(&model.hvp(d));
    let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + b).collect();
    let ared = obj.value(&trial) - model.value();
    let ratio = if pred > 0.0 { Some(ared / pred) } else { None };
    StepEvaluation { pred, ared, ratio }
}

/// Radius for the next iteration.
pub fn update_radius(radius: f64, rho: f64, step_norm: f64, cfg: &TrustRegionConfig) -> f64 {
    if rho <= cfg.eta1 {
        cfg.gamma1 * radius
    } else if rho >= cfg.eta2 && (step_norm - radius).abs() <= 1e-9 * radius {
        (cfg.gamma2 * radius).min(cfg.max_radius)
    } else {
        radius
    }
}

/// One outer iteration as seen by logging.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Objective at the iterate the step started from.
    pub value: f64,
    pub grad_norm: f64,
    /// Trust radius, or accepted step length for line-search methods.
    pub radius: f64,
    pub rho: Option<f64>,
    /// CG iterations, or backtracks for line-search methods.
    pub inner_iterations: usize,
    pub accepted: bool,
    pub step_norm: f64,
}

/// Optimizer state after the last iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrState {
    pub x: Apv,
    pub radius: f64,
    pub rho: Option<f64>,
    pub grad_norm: f64,
    pub step_norm: f64,
    pub accepted: bool,
    pub cg_iterations: usize,
    /// Objective at the start point and at every accepted iterate.
    pub values: Vec<f64>,
}

/// Why an optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    SmallGradient,
    SmallStep,
    SmallRadius,
    /// Line search found no acceptable step.
    LineSearchFailed,
    MaxIterations,
}

/// Result of a trust-region run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrOutcome {
    pub x: Apv,
    pub state: TrState,
    pub trace: Vec<IterationRecord>,
    pub stop: StopReason,
}

impl TrOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn accepted_steps(&self) -> usize {
        self.trace.iter().filter(|r| r.accepted).count()
    }
}

pub(crate) fn check_start(x0: &Apv, g: &GeometryConfig) -> Result<()> {
    let report = is_feasible(x0, g)?;
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(Error::InfeasiblePoint {
            row: v.row,
            excess: v.excess,
        }),
    }
}

/// Projected trust-region maximization of `obj` from `x0`.
pub fn ptrso<O: Objective>(x0: &Apv, obj: &O, g: &GeometryConfig, cfg: &TrustRegionConfig) -> Result<TrOutcome> {
    cfg.validate()?;
    check_start(x0, g)?;
    if obj.dim() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            found: x0.len(),
        });
    }
    let n = x0.len();
    let cg_max = cfg.cg_max_iter.unwrap_or(2 * n);
    let mut x = x0.clone();
    let mut model = obj.expand(&x);
    let mut radius = cfg.initial_radius;
    let mut values = alloc::vec![model.value()];
    let mut trace = Vec::new();
    let mut last = (None, 0.0, false, 0usize);
    let stop;
    let mut k = 0;
    loop {
        let gnorm = model.gradient().norm();
        if gnorm < cfg.grad_tol {
            stop = StopReason::SmallGradient;
            break;
        }
        if radius < cfg.step_tol {
            stop = StopReason::SmallRadius;
            break;
        }
        if k == cfg.max_iter {
            stop = StopReason::MaxIterations;
            break;
        }
        let tol = cfg.cg_forcing.min(libm::sqrt(gnorm)) * gnorm;
        let cg = steihaug_cg(model.gradient(), |v| model.hvp(v), radius, tol, cg_max);
        let trial: Vec<f64> = x.iter().zip(cg.step.iter()).map(|(a, b)| a + b).collect();
        let proj = project(&trial, g)?;
        let d = RVector::from_iterator(n, proj.iter().zip(x.iter()).map(|(a, b)| a - b));
        let step_norm = d.norm();
        let eval = evaluate_step(&x, &d, obj, &model);
        let accepted = matches!(eval.ratio, Some(r) if r > cfg.eta) && eval.ared > 0.0;
        trace.push(IterationRecord {
            k,
            value: model.value(),
            grad_norm: gnorm,
            radius,
            rho: eval.ratio,
            inner_iterations: cg.iterations,
            accepted,
            step_norm,
        });
        radius = match eval.ratio {
            Some(rho) => update_radius(radius, rho, step_norm, cfg),
            None => cfg.gamma1 * radius,
        };
        last = (eval.ratio, step_norm, accepted, cg.iterations);
        if accepted {
            x = proj;
            model = obj.expand(&x);
            values.push(model.value());
        }
        k += 1;
        if step_norm < cfg.step_tol {
            stop = StopReason::SmallStep;
            break;
        }
    }
    let state = TrState {
        x: x.clone(),
        radius,
        rho: last.0,
        grad_norm: model.gradient().norm(),
        step_norm: last.1,
        accepted: last.2,
        cg_iterations: last.3,
        values,
    };
    Ok(TrOutcome {
        x,
        state,
        trace,
        stop,
    })
}

/// Diagnostics of one block of the two-timescale loop.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockResult {
    pub anchor: Apv,
    pub next_anchor: Apv,
    /// Sample covariance formed at the anchor.
    pub covariance: FactorizedCovariance,
    /// MVDR weights used during the block, from the anchor's sample covariance.
    pub weights: BeamformerWeights,
    pub outcome: TrOutcome,
}

/// Block-level settings shared by every block of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSettings {
    pub snapshots: usize,
    pub law: SymbolLaw,
    /// Requested diagonal loading; a fallback is applied if the estimate is singular.
    pub loading: f64,
}

/// Collects one block at `anchor`, forms `R̂`, and returns the optimized next anchor.
pub fn run_block<R: Rng + ?Sized>(
    anchor: &Apv,
    s: &ScenarioConfig,
    settings: &BlockSettings,
    g: &GeometryConfig,
    cfg: &TrustRegionConfig,
    index: usize,
    rng: &mut R,
) -> Result<BlockResult> {
    let symbols = SymbolBlock::draw(anchor.len(), s, settings.snapshots, settings.law, rng)?;
    run_block_with_symbols(anchor, s, &symbols, settings.loading, g, cfg, index)
}

/// As [`run_block`] with pre-drawn symbols.
pub fn run_block_with_symbols(
    anchor: &Apv,
    s: &ScenarioConfig,
    symbols: &SymbolBlock,
    loading: f64,
    g: &GeometryConfig,
    cfg: &TrustRegionConfig,
    index: usize,
) -> Result<BlockResult> {
    let block = SnapshotBlock::new(symbols.received(anchor, s)?, anchor.clone(), index)?;
    let covariance = sample_covariance_with_fallback(&block, loading)?;
    let h0 = desired_channel(anchor, s.paths(), s.wavenumber());
    let weights = mvdr_weights(&covariance, &h0)?;
    let ctx = SurrogateContext::new(anchor.clone(), covariance.clone(), s.paths().clone(), s.wavenumber())?;
    let outcome = ptrso(anchor, &ctx, g, cfg)?;
    Ok(BlockResult {
        anchor: anchor.clone(),
        next_anchor: outcome.x.clone(),
        covariance,
        weights,
        outcome,
    })
}
