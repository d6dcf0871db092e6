//! Slow, direct reference computations for checking the fast paths in
//! `antijam-core`: explicit inverses, naive accumulations, finite differences,
//! an exhaustive active-set projection and an eigendecomposition-based
//! trust-region solver. Also random instance generators shared by the tests.

use std::f64::consts::PI;

use antijam_core::geometry::{random_feasible, Apv, GeometryConfig};
use antijam_core::model::{DesiredPaths, JammerSet, ScenarioConfig};
use antijam_core::objective::{Objective, PointModel};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

// ---------------------------------------------------------------- generators

pub fn cn<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let sd = (variance / 2.0).sqrt();
    C64::new(
        sd * rng.sample::<f64, _>(StandardNormal),
        sd * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Scenario drawn from the default evaluation law: `L` paths with
/// `θ ~ U[0, π]`, `α ~ CN(0, 1/(2L))`; `I` jammers with `φ ~ U[0, π]`,
/// `ζ ~ CN(0, 1)` and power `jsr·σ_s²`; unit wavelength and noise.
pub fn random_scenario<R: Rng + ?Sized>(
    rng: &mut R,
    paths: usize,
    jammers: usize,
    snr_db: f64,
    jsr: f64,
) -> ScenarioConfig {
    let sigma_s2 = 10f64.powf(snr_db / 10.0);
    let angles = (0..paths).map(|_| rng.random::<f64>() * PI).collect();
    let gains = (0..paths)
        .map(|_| cn(rng, 1.0 / (2.0 * paths as f64)))
        .collect();
    let p = DesiredPaths::new(angles, gains).unwrap();
    let ja = (0..jammers).map(|_| rng.random::<f64>() * PI).collect();
    let jg = (0..jammers).map(|_| cn(rng, 1.0)).collect();
    let j = JammerSet::new(ja, jg, vec![jsr * sigma_s2; jammers]).unwrap();
    ScenarioConfig::new(1.0, sigma_s2, 1.0, p, j).unwrap()
}

/// Random feasible position vector for `n` antennas, half-wavelength spacing,
/// aperture `aperture`.
pub fn random_apv<R: Rng + ?Sized>(rng: &mut R, n: usize, aperture: f64) -> (GeometryConfig, Apv) {
    let g = GeometryConfig::new(n, 0.5, aperture).unwrap();
    let x = random_feasible(&g, rng);
    (g, x)
}

/// `(1/m) G Gᴴ + ε I` for an `n × m` complex Gaussian `G`.
pub fn random_wishart<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, eps: f64) -> CMatrix {
    let g = CMatrix::from_fn(n, m, |_, _| cn(rng, 1.0));
    let mut r = &g * g.adjoint() / C64::new(m as f64, 0.0);
    for i in 0..n {
        r[(i, i)] += eps;
    }
    r
}

pub fn random_cvector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| cn(rng, 1.0))
}

// ---------------------------------------------------------------- model

/// Explicit inverse by LU.
pub fn dense_inverse(a: &CMatrix) -> CMatrix {
    a.clone().try_inverse().expect("singular matrix")
}

/// `Σ_ℓ α_ℓ (cos φ + j sin φ)` per entry with `φ = 2π x_n sin θ_ℓ / λ`.
pub fn direct_channel(x: &[f64], angles: &[f64], gains: &[C64], wavelength: f64) -> CVector {
    CVector::from_fn(x.len(), |n, _| {
        let mut acc = C64::new(0.0, 0.0);
        for (t, a) in angles.iter().zip(gains) {
            let phase = 2.0 * PI / wavelength * x[n] * t.sin();
            acc += a * C64::new(phase.cos(), phase.sin());
        }
        acc
    })
}

/// True covariance by accumulating one outer product per source.
pub fn rank_one_covariance(x: &[f64], s: &ScenarioConfig, include_signal: bool) -> CMatrix {
    let n = x.len();
    let mut r = CMatrix::zeros(n, n);
    let outer = |v: &CVector, p: f64, r: &mut CMatrix| {
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] += v[i] * v[j].conj() * p;
            }
        }
    };
    if include_signal {
        let h = direct_channel(x, s.paths().angles(), s.paths().gains(), s.wavelength());
        outer(&h, s.sigma_s2(), &mut r);
    }
    let j = s.jammers();
    for i in 0..j.len() {
        let g = direct_channel(x, &j.angles()[i..=i], &j.gains()[i..=i], s.wavelength());
        outer(&g, j.powers()[i], &mut r);
    }
    for i in 0..n {
        r[(i, i)] += s.sigma_n2();
    }
    r
}

/// `(1/T) Σ_t r_t r_tᴴ` by explicit loops.
pub fn outer_product_average(data: &CMatrix) -> CMatrix {
    let (n, t) = data.shape();
    let mut r = CMatrix::zeros(n, n);
    for c in 0..t {
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] += data[(i, c)] * data[(j, c)].conj();
            }
        }
    }
    r / C64::new(t as f64, 0.0)
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

// ---------------------------------------------------------------- calculus

/// Central-difference gradient.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> RVector {
    let mut g = RVector::zeros(x.len());
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = f(&y);
        y[i] = x[i] - h;
        let fm = f(&y);
        y[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central-difference Jacobian of a vector field; column `j` is `∂F/∂x_j`.
pub fn fd_jacobian<F: Fn(&[f64]) -> RVector>(f: F, x: &[f64], h: f64) -> RMatrix {
    let n = x.len();
    let mut jac = RMatrix::zeros(n, n);
    let mut y = x.to_vec();
    for j in 0..n {
        y[j] = x[j] + h;
        let fp = f(&y);
        y[j] = x[j] - h;
        let fm = f(&y);
        y[j] = x[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// Second central differences along each axis, Richardson-extrapolated from
/// steps `h` and `h/2`.
pub fn fd_hessian_diagonal<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> RVector {
    let f0 = f(x);
    let mut y = x.to_vec();
    let mut second = |i: usize, h: f64| {
        y[i] = x[i] + h;
        let fp = f(&y);
        y[i] = x[i] - h;
        let fm = f(&y);
        y[i] = x[i];
        (fp - 2.0 * f0 + fm) / (h * h)
    };
    RVector::from_fn(x.len(), |i, _| {
        let a = second(i, h);
        let b = second(i, h / 2.0);
        (4.0 * b - a) / 3.0
    })
}

// ---------------------------------------------------------------- projection

/// Exact projection onto `{x : U x ⪯ l}` by enumerating active sets.
///
/// Returns the projection and the multiplier vector (zero on inactive rows).
pub fn qp_projection(trial: &[f64], u: &RMatrix, l: &RVector) -> (RVector, RVector) {
    let (m, n) = u.shape();
    let v = RVector::from_column_slice(trial);
    let mut best: Option<(f64, RVector, RVector)> = None;
    for mask in 0u32..(1 << m) {
        let rows: Vec<usize> = (0..m).filter(|r| mask & (1 << r) != 0).collect();
        let k = rows.len();
        // KKT: [I Uₛᵀ; Uₛ 0] [x; ν] = [v; lₛ]
        let mut kkt = RMatrix::zeros(n + k, n + k);
        let mut rhs = RVector::zeros(n + k);
        for i in 0..n {
            kkt[(i, i)] = 1.0;
            rhs[i] = v[i];
        }
        for (a, &r) in rows.iter().enumerate() {
            for j in 0..n {
                kkt[(n + a, j)] = u[(r, j)];
                kkt[(j, n + a)] = u[(r, j)];
            }
            rhs[n + a] = l[r];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        if sol.iter().any(|s| !s.is_finite()) {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        let nu_s = sol.rows(n, k).into_owned();
        if nu_s.iter().any(|&w| w < -1e-10) {
            continue;
        }
        let ux = u * &x;
        if (0..m).any(|r| ux[(r, 0)] > l[r] + 1e-10) {
            continue;
        }
        let mut nu = RVector::zeros(m);
        for (a, &r) in rows.iter().enumerate() {
            nu[r] = nu_s[a];
        }
        let obj = (&x - &v).norm_squared();
        if best.as_ref().is_none_or(|b| obj < b.0 - 1e-14) {
            best = Some((obj, x, nu));
        }
    }
    let (_, x, nu) = best.expect("no KKT point found");
    (x, nu)
}

// ---------------------------------------------------------------- trust region

/// Global maximizer of `gᵀp + ½pᵀHp` over `‖p‖ ≤ Δ` from the eigendecomposition
/// of `H`, including the hard case.
pub fn exact_trust_region(g: &RVector, h: &RMatrix, radius: f64) -> RVector {
    // Minimize fᵀp + ½pᵀBp with f = −g, B = −H.
    let b = -h;
    let eig = b.clone().symmetric_eigen();
    let q = eig.eigenvectors;
    let lam = eig.eigenvalues;
    let n = g.len();
    let ft = q.transpose() * (-g);
    let lmin = lam.iter().cloned().fold(f64::INFINITY, f64::min);
    let step_norm = |mu: f64| -> f64 {
        (0..n)
            .map(|i| (ft[i] / (lam[i] + mu)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let build = |mu: f64| -> RVector {
        let c = RVector::from_fn(n, |i, _| -ft[i] / (lam[i] + mu));
        &q * c
    };
    if lmin > 0.0 && step_norm(0.0) <= radius {
        return build(0.0);
    }
    let lo0 = (-lmin).max(0.0);
    // Hard case: gradient orthogonal to the bottom eigenspace.
    let bottom: Vec<usize> = (0..n).filter(|&i| (lam[i] - lmin).abs() <= 1e-12 * (1.0 + lmin.abs())).collect();
    let orth = bottom.iter().all(|&i| ft[i].abs() <= 1e-14 * (1.0 + ft.norm()));
    if orth && lmin <= 0.0 {
        let partial = (0..n)
            .filter(|i| !bottom.contains(i))
            .map(|i| (ft[i] / (lam[i] - lmin)).powi(2))
            .sum::<f64>()
            .sqrt();
        if partial <= radius {
            let c = RVector::from_fn(n, |i, _| {
                if bottom.contains(&i) {
                    0.0
                } else {
                    -ft[i] / (lam[i] - lmin)
                }
            });
            let p = &q * c;
            let tau = (radius * radius - partial * partial).max(0.0).sqrt();
            return p + q.column(bottom[0]) * tau;
        }
    }
    let mut lo = lo0;
    let mut hi = lo0 + 1.0;
    while step_norm(hi) > radius {
        hi = lo0 + 2.0 * (hi - lo0);
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if step_norm(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    build(hi)
}

/// `gᵀp + ½pᵀHp`.
pub fn model_gain(g: &RVector, h: &RMatrix, p: &RVector) -> f64 {
    g.dot(p) + 0.5 * p.dot(&(h * p))
}

// ---------------------------------------------------------------- synthetic objectives

/// Concave quadratic `f(x) = gᵀ(x − x₀) + ½(x − x₀)ᵀH(x − x₀)`.
pub struct Quadratic {
    pub x0: Vec<f64>,
    pub g: RVector,
    pub h: RMatrix,
}

pub struct QuadPoint<'a> {
    q: &'a Quadratic,
    value: f64,
    grad: RVector,
}

impl PointModel for QuadPoint<'_> {
    fn value(&self) -> f64 {
        self.value
    }
    fn gradient(&self) -> &RVector {
        &self.grad
    }
    fn hvp(&self, v: &RVector) -> RVector {
        &self.q.h * v
    }
}

impl Objective for Quadratic {
    type Point<'a> = QuadPoint<'a>;
    fn dim(&self) -> usize {
        self.x0.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let d = RVector::from_iterator(x.len(), x.iter().zip(&self.x0).map(|(a, b)| a - b));
        self.g.dot(&d) + 0.5 * d.dot(&(&self.h * &d))
    }
    fn expand(&self, x: &[f64]) -> QuadPoint<'_> {
        let d = RVector::from_iterator(x.len(), x.iter().zip(&self.x0).map(|(a, b)| a - b));
        QuadPoint {
            q: self,
            value: self.value(x),
            grad: &self.g + &self.h * d,
        }
    }
    fn hessian(&self, _x: &[f64]) -> RMatrix {
        self.h.clone()
    }
}
