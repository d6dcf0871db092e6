//! True and surrogate MVDR objectives with closed-form first and second
//! derivatives in the antenna positions.
//!
//! With `h = h0(x)`, `M = R̂⁻¹` and `z = M h`, moving antenna `n` only changes
//! `h_n`, by `b_n = Σ_ℓ jkα_ℓ sinθ_ℓ e^{jk x_n sinθ_ℓ}` per unit length, and
//! `∂b_n/∂x_n = −k² c_n`. Hence `∇ĝ_n = 2Re{b_n* z_n}` and
//! `H_mn = 2Re{b_m* M_mn b_n} − 2k² δ_mn Re{c_n* z_n}`.

use crate::error::{Error, Result};
use crate::geometry::Apv;
use crate::linalg::{CVector, RMatrix, RVector, C64};
use crate::model::{desired_channel, true_covariance, DesiredPaths, FactorizedCovariance, ScenarioConfig};

/// Value, gradient and Hessian-vector products of an objective at one point.
pub trait PointModel {
    fn value(&self) -> f64;
    fn gradient(&self) -> &RVector;
    /// `H v` at the expansion point.
    fn hvp(&self, v: &RVector) -> RVector;
}

/// A smooth objective to be maximized over antenna positions.
pub trait Objective {
    type Point<'a>: PointModel
    where
        Self: 'a;

    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Caches what is needed for the gradient and repeated curvature products at `x`.
    fn expand(&self, x: &[f64]) -> Self::Point<'_>;
    /// Explicit Hessian.
    fn hessian(&self, x: &[f64]) -> RMatrix;
}

/// Per-antenna channel scalars at a position: `h0`, `b` and `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCache {
    pub h0: CVector,
    pub b: CVector,
    pub c: CVector,
}

impl DerivativeCache {
    pub fn new(x: &[f64], paths: &DesiredPaths, k: f64) -> Self {
        let n = x.len();
        let mut h0 = CVector::zeros(n);
        let mut b = CVector::zeros(n);
        let mut c = CVector::zeros(n);
        for (&theta, &alpha) in paths.angles().iter().zip(paths.gains()) {
            let s = libm::sin(theta);
            let jk_s = C64::new(0.0, k * s);
            for i in 0..n {
                let term = alpha * C64::cis(k * x[i] * s);
                h0[i] += term;
                b[i] += jk_s * term;
                c[i] += term * (s * s);
            }
        }
        Self { h0, b, c }
    }

    /// The diagonal Jacobian `∂h0/∂x = diag(b)`.
    pub fn jacobian(&self) -> crate::linalg::CMatrix {
        crate::linalg::CMatrix::from_diagonal(&self.b)
    }
}

/// Block surrogate `ĝ(x) = h0(x)ᴴ R̂(x_i)⁻¹ h0(x)` for a fixed anchor covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateContext {
    anchor: Apv,
    cov: FactorizedCovariance,
    paths: DesiredPaths,
    k: f64,
}

impl SurrogateContext {
    pub fn new(anchor: Apv, cov: FactorizedCovariance, paths: DesiredPaths, k: f64) -> Result<Self> {
        if cov.dim() != anchor.len() {
            return Err(Error::DimensionMismatch {
                expected: anchor.len(),
                found: cov.dim(),
            });
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidScenario("wavenumber must be positive"));
        }
        Ok(Self {
            anchor,
            cov,
            paths,
            k,
        })
    }

    pub fn anchor(&self) -> &Apv {
        &self.anchor
    }

    pub fn covariance(&self) -> &FactorizedCovariance {
        &self.cov
    }

    pub fn paths(&self) -> &DesiredPaths {
        &self.paths
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    /// `ĝ(x)`, one forward triangular solve.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.cov
            .inverse_quadratic_form(&desired_channel(x, &self.paths, self.k))
    }

    pub fn gradient(&self, x: &[f64]) -> RVector {
        self.local_model(x).gradient
    }

    /// Dense Hessian through the explicit inverse, `O(N_r³)`.
    pub fn hessian(&self, x: &[f64]) -> RMatrix {
        let cache = DerivativeCache::new(x, &self.paths, self.k);
        let m = self.cov.inverse();
        let z = &m * &cache.h0;
        let n = x.len();
        let mut h = RMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                h[(i, j)] = 2.0 * (cache.b[i].conj() * m[(i, j)] * cache.b[j]).re;
            }
            h[(j, j)] -= 2.0 * self.k * self.k * (cache.c[j].conj() * z[j]).re;
        }
        h
    }

    /// `H v` without forming `H`.
    pub fn hessian_vector_product(&self, x: &[f64], v: &RVector) -> Result<RVector> {
        if v.len() != x.len() || x.len() != self.anchor.len() {
            return Err(Error::DimensionMismatch {
                expected: self.anchor.len(),
                found: if v.len() != x.len() { v.len() } else { x.len() },
            });
        }
        Ok(self.local_model(x).hvp(v))
    }

    /// Value, gradient and curvature cache at `x`.
    pub fn local_model(&self, x: &[f64]) -> LocalModel<'_> {
        let cache = DerivativeCache::new(x, &self.paths, self.k);
        let z = self.cov.solve(&cache.h0);
        let value = self.cov.inverse_quadratic_form(&cache.h0);
        let n = x.len();
        let gradient = RVector::from_iterator(n, (0..n).map(|i| 2.0 * (cache.b[i].conj() * z[i]).re));
        let k2 = self.k * self.k;
        let curvature =
            RVector::from_iterator(n, (0..n).map(|i| -2.0 * k2 * (cache.c[i].conj() * z[i]).re));
        LocalModel {
            ctx: self,
            value,
            gradient,
            cache,
            z,
            curvature,
        }
    }
}

/// Surrogate quantities cached at one point.
#[derive(Debug, Clone)]
pub struct LocalModel<'a> {
    ctx: &'a SurrogateContext,
    value: f64,
    gradient: RVector,
    cache: DerivativeCache,
    z: CVector,
    curvature: RVector,
}

impl LocalModel<'_> {
    pub fn cache(&self) -> &DerivativeCache {
        &self.cache
    }

    /// `R̂⁻¹ h0(x)`.
    pub fn weighted_channel(&self) -> &CVector {
        &self.z
    }
}

impl PointModel for LocalModel<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn gradient(&self) -> &RVector {
        &self.gradient
    }

    fn hvp(&self, v: &RVector) -> RVector {
        let b = &self.cache.b;
        let u = CVector::from_iterator(b.len(), b.iter().zip(v.iter()).map(|(bi, &vi)| bi * vi));
        let y = self.ctx.cov.solve(&u);
        RVector::from_iterator(
            b.len(),
            (0..b.len()).map(|i| 2.0 * (b[i].conj() * y[i]).re + self.curvature[i] * v[i]),
        )
    }
}

impl Objective for SurrogateContext {
    type Point<'a> = LocalModel<'a>;

    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        SurrogateContext::value(self, x)
    }

    fn expand(&self, x: &[f64]) -> LocalModel<'_> {
        self.local_model(x)
    }

    fn hessian(&self, x: &[f64]) -> RMatrix {
        SurrogateContext::hessian(self, x)
    }
}

/// True objective `g(x) = h0(x)ᴴ R(x)⁻¹ h0(x)`.
pub fn true_value(x: &[f64], s: &ScenarioConfig) -> Result<f64> {
    let r = true_covariance(x, s)?;
    Ok(r.inverse_quadratic_form(&desired_channel(x, s.paths(), s.wavenumber())))
}

/// `q(p) = f₀ + gᵀp + ½ pᵀ H p` with `H p` supplied by `hvp`.
pub fn quadratic_model<F>(f0: f64, grad: &RVector, hvp: F, p: &RVector) -> f64
where
    F: FnOnce(&RVector) -> RVector,
{
    f0 + grad.dot(p) + 0.5 * p.dot(&hvp(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ula, GeometryConfig};
    use crate::linalg::CMatrix;
    use crate::model::JammerSet;
    use core::f64::consts::PI;

    fn ctx_with(cov: CMatrix, paths: DesiredPaths, n: usize) -> SurrogateContext {
        let g = GeometryConfig::new(n, 0.5, 4.0).unwrap();
        SurrogateContext::new(
            ula(&g),
            FactorizedCovariance::new(cov, 0.0).unwrap(),
            paths,
            2.0 * PI,
        )
        .unwrap()
    }

    #[test]
    fn identity_covariance_gives_channel_energy() {
        let p = DesiredPaths::new(
            alloc::vec![0.3, 1.1],
            alloc::vec![C64::new(0.5, 0.1), C64::new(-0.2, 0.7)],
        )
        .unwrap();
        let ctx = ctx_with(CMatrix::identity(3, 3), p.clone(), 3);
        let x = [0.1, 0.9, 2.0];
        let h = desired_channel(&x, &p, 2.0 * PI);
        assert!((ctx.value(&x) - h.norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn single_path_white_covariance_is_flat() {
        let p = DesiredPaths::new(alloc::vec![0.8], alloc::vec![C64::new(0.6, -0.3)]).unwrap();
        let ctx = ctx_with(CMatrix::identity(4, 4) * C64::new(2.0, 0.0), p.clone(), 4);
        let x = [0.0, 0.7, 1.9, 3.2];
        assert!(ctx.gradient(&x).amax() < 1e-12);
        let ctx1 = ctx_with(CMatrix::identity(4, 4), p, 4);
        assert!(ctx1.hessian(&x).amax() < 1e-10);
    }

    #[test]
    fn single_antenna_gradient_vanishes() {
        let p = DesiredPaths::new(alloc::vec![1.1], alloc::vec![C64::new(-0.2, 0.7)]).unwrap();
        let ctx = ctx_with(CMatrix::identity(1, 1) * C64::new(3.3, 0.0), p, 1);
        assert!(ctx.gradient(&[0.37]).amax() < 1e-12);
    }

    #[test]
    fn true_value_scalar_and_white_cases() {
        let alpha = C64::new(0.8, -0.6);
        let p = DesiredPaths::new(alloc::vec![0.4], alloc::vec![alpha]).unwrap();
        let s = ScenarioConfig::new(1.0, 2.0, 0.5, p.clone(), JammerSet::none()).unwrap();
        let g = true_value(&[0.3], &s).unwrap();
        let a2 = alpha.norm_sqr();
        assert!((g - a2 / (2.0 * a2 + 0.5)).abs() < 1e-14);

        let s = ScenarioConfig::new(1.0, 0.0, 0.5, p.clone(), JammerSet::none()).unwrap();
        let x = [0.0, 0.6, 1.4];
        let h = desired_channel(&x, &p, 2.0 * PI);
        assert!((true_value(&x, &s).unwrap() - h.norm_squared() / 0.5).abs() < 1e-12);
    }

    #[test]
    fn hvp_rejects_wrong_dimension() {
        let ctx = ctx_with(CMatrix::identity(3, 3), DesiredPaths::single(0.5), 3);
        assert!(ctx
            .hessian_vector_product(&[0.0, 0.5, 1.0], &RVector::zeros(2))
            .is_err());
        let zero = ctx
            .hessian_vector_product(&[0.0, 0.5, 1.0], &RVector::zeros(3))
            .unwrap();
        assert_eq!(zero, RVector::zeros(3));
    }

    #[test]
    fn quadratic_model_at_origin() {
        let g = RVector::from_column_slice(&[1.0, -2.0]);
        let p = RVector::zeros(2);
        assert_eq!(quadratic_model(3.5, &g, |v| v * 7.0, &p), 3.5);
    }
}
