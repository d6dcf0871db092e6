//! Comparison optimizers: projected gradient and projected modified Newton with
//! Armijo backtracking, and trust-region ascent on the historical-average
//! surrogate.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{project, Apv, GeometryConfig};
use crate::linalg::{real_cholesky_solve, symmetric_min_eigenvalue, CMatrix, RMatrix, RVector, C64};
use crate::model::{DesiredPaths, FactorizedCovariance};
use crate::objective::{Objective, PointModel, SurrogateContext};
use crate::trsolver::{check_start, ptrso, IterationRecord, StopReason, TrOutcome, TrustRegionConfig};

/// Backtracking parameters for the ascent Armijo rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchConfig {
    /// Sufficient-increase constant c₁.
    pub armijo: f64,
    /// Backtracking factor β.
    pub backtrack: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            armijo: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            max_backtracks: 30,
            grad_tol: 1e-6,
            step_tol: 1e-6,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::InvalidConfig("need 0 < c₁ < 1"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidConfig("need 0 < β < 1"));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidConfig("initial step must be positive"));
        }
        Ok(())
    }
}

/// Result of a line-search run.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub x: Apv,
    /// Objective at the start point and at every accepted iterate.
    pub values: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    pub stop: StopReason,
}

impl LineSearchOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Modified-Newton ascent direction: solves `(−H + τI) p = ∇` with
/// `τ = max(0, −λ_min(−H)) + 1e-8`. Returns `(p, τ)`.
pub fn newton_direction(grad: &RVector, hessian: &RMatrix) -> Result<(RVector, f64)> {
    let n = grad.len();
    let neg = -hessian;
    let tau = (-symmetric_min_eigenvalue(&neg)).max(0.0) + 1e-8;
    let shifted = neg + RMatrix::identity(n, n) * tau;
    let p = real_cholesky_solve(&shifted, grad).ok_or(Error::NotPositiveDefinite)?;
    Ok((p, tau))
}

fn line_search_ascent<O, D>(
    x0: &Apv,
    obj: &O,
    g: &GeometryConfig,
    ls: &LineSearchConfig,
    max_iter: usize,
    mut direction: D,
) -> Result<LineSearchOutcome>
where
    O: Objective,
    D: FnMut(&[f64], &RVector) -> Result<RVector>,
{
    ls.validate()?;
    check_start(x0, g)?;
    if obj.dim() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            found: x0.len(),
        });
    }
    let n = x0.len();
    let mut x = x0.clone();
    let mut fx = obj.value(&x);
    let mut values = alloc::vec![fx];
    let mut trace = Vec::new();
    let mut k = 0;
    let stop = loop {
        if k == max_iter {
            break StopReason::MaxIterations;
        }
        let grad = obj.expand(&x).gradient().clone();
        let gnorm = grad.norm();
        if gnorm < ls.grad_tol {
            break StopReason::SmallGradient;
        }
        let dir = direction(&x, &grad)?;
        let mut t = ls.initial_step;
        let mut found = None;
        for bt in 0..=ls.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, b)| a + t * b).collect();
            let cand = project(&trial, g)?;
            let d = RVector::from_iterator(n, cand.iter().zip(x.iter()).map(|(a, b)| a - b));
            let fc = obj.value(&cand);
            let gain = fc - fx;
            if d.norm() > 0.0 && gain >= ls.armijo * grad.dot(&d).max(0.0) {
                found = Some((cand, fc, d.norm(), bt, t));
                break;
            }
            t *= ls.backtrack;
        }
        let Some((cand, fc, step_norm, backtracks, t)) = found else {
            trace.push(IterationRecord {
                k,
                value: fx,
                grad_norm: gnorm,
                radius: 0.0,
                rho: None,
                inner_iterations: ls.max_backtracks + 1,
                accepted: false,
                step_norm: 0.0,
            });
            break StopReason::LineSearchFailed;
        };
        trace.push(IterationRecord {
            k,
            value: fx,
            grad_norm: gnorm,
            radius: t,
            rho: None,
            inner_iterations: backtracks,
            accepted: true,
            step_norm,
        });
        x = cand;
        fx = fc;
        values.push(fx);
        k += 1;
        if step_norm < ls.step_tol {
            break StopReason::SmallStep;
        }
    };
    Ok(LineSearchOutcome {
        x,
        values,
        trace,
        stop,
    })
}

/// Projected gradient ascent, `x ← P(x + t∇)` with Armijo backtracking on `t`.
pub fn pgd<O: Objective>(
    x0: &Apv,
    obj: &O,
    g: &GeometryConfig,
    ls: &LineSearchConfig,
    max_iter: usize,
) -> Result<LineSearchOutcome> {
    line_search_ascent(x0, obj, g, ls, max_iter, |_, grad| Ok(grad.clone()))
}

/// Projected modified Newton ascent with an explicitly formed Hessian.
pub fn projected_newton<O: Objective>(
    x0: &Apv,
    obj: &O,
    g: &GeometryConfig,
    ls: &LineSearchConfig,
    max_iter: usize,
) -> Result<LineSearchOutcome> {
    line_search_ascent(x0, obj, g, ls, max_iter, |x, grad| {
        newton_direction(grad, &obj.hessian(x)).map(|(p, _)| p)
    })
}

/// Entrywise mean `(1/M) Σ R̂_m` of factored covariances.
///
/// The inputs' loading is already part of their matrices, so the result
/// reports zero additional loading.
pub fn historical_average_covariance(blocks: &[FactorizedCovariance]) -> Result<FactorizedCovariance> {
    let first = blocks.first().ok_or(Error::Empty("covariance history"))?;
    let n = first.dim();
    let mut sum = CMatrix::zeros(n, n);
    for b in blocks {
        if b.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.dim(),
            });
        }
        sum += b.matrix();
    }
    sum /= C64::new(blocks.len() as f64, 0.0);
    FactorizedCovariance::new(sum, 0.0)
}

/// Trust-region ascent from `x0` on the surrogate built from the mean of
/// `history` (which should include the covariance collected at `x0`).
pub fn ptrso_historical(
    x0: &Apv,
    history: &[FactorizedCovariance],
    paths: &DesiredPaths,
    k: f64,
    g: &GeometryConfig,
    cfg: &TrustRegionConfig,
) -> Result<TrOutcome> {
    let avg = historical_average_covariance(history)?;
    let ctx = SurrogateContext::new(x0.clone(), avg, paths.clone(), k)?;
    ptrso(x0, &ctx, g, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_of_identity_and_triple_identity() {
        let a = FactorizedCovariance::new(CMatrix::identity(3, 3), 0.0).unwrap();
        let b = FactorizedCovariance::new(CMatrix::identity(3, 3) * C64::new(3.0, 0.0), 0.0).unwrap();
        let m = historical_average_covariance(&[a.clone(), b]).unwrap();
        assert!((m.matrix() - CMatrix::identity(3, 3) * C64::new(2.0, 0.0)).norm() < 1e-15);
        let same = historical_average_covariance(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert!((same.matrix() - a.matrix()).norm() < 1e-15);
        assert!(historical_average_covariance(&[]).is_err());
    }

    #[test]
    fn newton_direction_ascends_at_indefinite_point() {
        let h = RMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -2.0]);
        let grad = RVector::from_column_slice(&[0.4, -1.0]);
        let (p, tau) = newton_direction(&grad, &h).unwrap();
        assert!(tau > 1.0);
        assert!(grad.dot(&p) > 0.0);
    }

    #[test]
    fn line_search_config_validation() {
        assert!(LineSearchConfig::default().validate().is_ok());
        let bad = LineSearchConfig {
            backtrack: 1.0,
            ..LineSearchConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
