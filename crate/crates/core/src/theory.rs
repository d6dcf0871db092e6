//! Numerical checks of the bounds behind the surrogate framework: steering and
//! covariance Lipschitz constants, sample-covariance concentration, the
//! surrogate gap, inverse-perturbation inequalities and the geometric bias of
//! the historical-average surrogate.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::Apv;
use crate::linalg::{
    hermitian_eigenvalues, hermitian_inv_sqrt, hermitian_spectral_norm, hermitize, CMatrix,
    CVector, C64,
};
use crate::model::{
    desired_channel, sample_covariance_matrix, steering_vector, true_covariance_matrix,
    FactorizedCovariance, ScenarioConfig, SymbolBlock, SymbolLaw,
};
use crate::objective::true_value;

/// Numerical slack admitted by one-sided bound checks.
pub const BOUND_SLACK: f64 = 1e-10;

/// Outcome of a one-sided inequality check over random draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub trials: usize,
    pub violations: usize,
    /// Largest amount by which the bound side was exceeded (negative when never reached).
    pub max_slack: f64,
}

impl BoundCheck {
    fn new() -> Self {
        Self {
            trials: 0,
            violations: 0,
            max_slack: f64::NEG_INFINITY,
        }
    }

    /// Records `excess = lhs − rhs` for an upper bound `lhs ≤ rhs`.
    fn record(&mut self, excess: f64, scale: f64) {
        self.trials += 1;
        self.max_slack = self.max_slack.max(excess);
        if excess > BOUND_SLACK * (1.0 + scale) {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn uniform_positions<R: Rng + ?Sized>(n: usize, span: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * span).collect()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    libm::sqrt(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// `‖a(x,θ) − a(y,θ)‖ ≤ k|sinθ|‖x − y‖` on random draws with unit wavelength,
/// `N_r ∈ [1, 16]`, positions in `[0, 8]` and `θ ∈ [−π, π]`.
pub fn check_steering_lipschitz<R: Rng + ?Sized>(trials: usize, rng: &mut R) -> BoundCheck {
    let k = 2.0 * PI;
    let mut out = BoundCheck::new();
    for _ in 0..trials {
        let n = rng.random_range(1..=16);
        let x = uniform_positions(n, 8.0, rng);
        let y = uniform_positions(n, 8.0, rng);
        let theta = (rng.random::<f64>() * 2.0 - 1.0) * PI;
        let lhs = (steering_vector(&x, theta, k) - steering_vector(&y, theta, k)).norm();
        let rhs = k * libm::fabs(libm::sin(theta)) * dist(&x, &y);
        out.record(lhs - rhs, rhs);
    }
    out
}

/// Closed-form covariance Lipschitz constant
/// `L_R = 2k√N_r (σ_s²√L‖α‖²√(Σ sin²θ_ℓ) + Σ σ_i²|ζ_i|²|sin φ_i|)`.
pub fn lipschitz_constant(s: &ScenarioConfig, antennas: usize) -> f64 {
    let k = s.wavenumber();
    let p = s.paths();
    let l = p.len() as f64;
    let alpha2 = p.gains().iter().map(|g| g.norm_sqr()).sum::<f64>();
    let sin2 = p
        .angles()
        .iter()
        .map(|&t| libm::sin(t) * libm::sin(t))
        .sum::<f64>();
    let desired = s.sigma_s2() * libm::sqrt(l) * alpha2 * libm::sqrt(sin2);
    let j = s.jammers();
    let jam: f64 = (0..j.len())
        .map(|i| j.powers()[i] * j.gains()[i].norm_sqr() * libm::fabs(libm::sin(j.angles()[i])))
        .sum();
    2.0 * k * libm::sqrt(antennas as f64) * (desired + jam)
}

/// Gap constant `C_R = 2k√L‖α‖/σ_n⁴`.
pub fn gap_constant(s: &ScenarioConfig) -> f64 {
    let l = s.paths().len() as f64;
    let sn2 = s.sigma_n2();
    2.0 * s.wavenumber() * libm::sqrt(l) * s.paths().gain_norm() / (sn2 * sn2)
}

/// `‖R(x) − R(y)‖ ≤ L_R‖x − y‖` on random position pairs in `[0, span]^N_r`.
pub fn check_covariance_lipschitz<R: Rng + ?Sized>(
    s: &ScenarioConfig,
    antennas: usize,
    span: f64,
    trials: usize,
    rng: &mut R,
) -> BoundCheck {
    let lr = lipschitz_constant(s, antennas);
    let mut out = BoundCheck::new();
    for _ in 0..trials {
        let x = uniform_positions(antennas, span, rng);
        let y = uniform_positions(antennas, span, rng);
        let diff = true_covariance_matrix(&x, s) - true_covariance_matrix(&y, s);
        let lhs = hermitian_spectral_norm(&diff);
        let rhs = lr * dist(&x, &y);
        out.record(lhs - rhs, rhs);
    }
    out
}

/// Constants attached to one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryBounds {
    pub lipschitz: f64,
    pub gap_constant: f64,
    /// `(T, mean ‖R̂ − R‖)` pairs.
    pub concentration: Vec<(usize, f64)>,
}

impl TheoryBounds {
    pub fn new(s: &ScenarioConfig, antennas: usize, concentration: Vec<(usize, f64)>) -> Self {
        Self {
            lipschitz: lipschitz_constant(s, antennas),
            gap_constant: gap_constant(s),
            concentration,
        }
    }

    /// Surrogate-gap envelope `C_R (L_R ‖x − x_i‖ + ε)` for an error level `ε`.
    pub fn gap_envelope(&self, displacement: f64, eps: f64) -> f64 {
        self.gap_constant * (self.lipschitz * displacement + eps)
    }
}

/// Monte Carlo mean of `‖R̂(x) − R(x)‖` for each block length in `t_list`.
pub fn concentration_curve<R: Rng + ?Sized>(
    s: &ScenarioConfig,
    x: &Apv,
    t_list: &[usize],
    trials: usize,
    law: SymbolLaw,
    rng: &mut R,
) -> Result<Vec<(usize, f64)>> {
    let r = true_covariance_matrix(x, s);
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let mut acc = 0.0;
        for _ in 0..trials {
            let sym = SymbolBlock::draw(x.len(), s, t, law, rng)?;
            let rh = sample_covariance_matrix(&sym.received(x, s)?);
            acc += hermitian_spectral_norm(&(rh - &r));
        }
        out.push((t, acc / trials as f64));
    }
    Ok(out)
}

fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = libm::sqrt(v.iter().map(|a| a * a).sum());
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Mean `|g(x_i + t u) − ĝ(x_i + t u)|` over noise realizations and random unit
/// directions `u`, for each `t` in `t_grid`.
pub fn surrogate_gap_profile<R: Rng + ?Sized>(
    s: &ScenarioConfig,
    anchor: &Apv,
    directions: usize,
    t_grid: &[f64],
    snapshots: usize,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if t_grid.is_empty() {
        return Err(Error::Empty("displacement grid"));
    }
    let n = anchor.len();
    let k = s.wavenumber();
    let mut acc = alloc::vec![0.0; t_grid.len()];
    for _ in 0..trials {
        let sym = SymbolBlock::draw(n, s, snapshots, SymbolLaw::Gaussian, rng)?;
        let cov = FactorizedCovariance::new(sample_covariance_matrix(&sym.received(anchor, s)?), 0.0)?;
        for _ in 0..directions {
            let u = random_unit(n, rng);
            for (slot, &t) in acc.iter_mut().zip(t_grid) {
                let x: Vec<f64> = anchor.iter().zip(&u).map(|(a, b)| a + t * b).collect();
                let g = true_value(&x, s)?;
                let gh = cov.inverse_quadratic_form(&desired_channel(&x, s.paths(), k));
                *slot += libm::fabs(g - gh);
            }
        }
    }
    let m = (trials * directions) as f64;
    Ok(acc.into_iter().map(|v| v / m).collect())
}

/// Haar-like random unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    g.qr().q()
}

/// Hermitian positive definite matrix with eigenvalues log-uniform in
/// `[lo, hi]` and a random unitary eigenbasis.
pub fn random_pd<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> CMatrix {
    let q = random_unitary(n, rng);
    let (a, b) = (libm::log(lo), libm::log(hi));
    let d = CVector::from_iterator(
        n,
        (0..n).map(|_| C64::new(libm::exp(a + (b - a) * rng.random::<f64>()), 0.0)),
    );
    let mut m = &q * CMatrix::from_diagonal(&d) * q.adjoint();
    hermitize(&mut m);
    m
}

fn inverse(a: &CMatrix) -> Result<CMatrix> {
    Ok(FactorizedCovariance::new(a.clone(), 0.0)?.inverse())
}

/// Lower bound `‖(A+B)⁻¹ − A⁻¹‖ ≥ (1/‖A‖)·‖X‖/(1+‖X‖)`, `X = A^{-1/2}BA^{-1/2}`,
/// for Hermitian `A ≻ 0` and `A + B ≻ 0`.
pub fn inverse_perturbation_lower(a: &CMatrix, b: &CMatrix) -> Result<(f64, f64)> {
    let ais = hermitian_inv_sqrt(a)?;
    let x = &ais * b * &ais;
    let xn = hermitian_spectral_norm(&x);
    let rhs = xn / (1.0 + xn) / hermitian_spectral_norm(a);
    let lhs = hermitian_spectral_norm(&(inverse(&(a + b))? - inverse(a)?));
    Ok((lhs, rhs))
}

/// Upper bound `‖H₁⁻¹ − H₂⁻¹‖ ≤ ‖H₁ − H₂‖/μ²` with `μ` the smaller minimum eigenvalue.
pub fn inverse_difference_upper(h1: &CMatrix, h2: &CMatrix) -> Result<(f64, f64)> {
    let mu = hermitian_eigenvalues(h1)[0].min(hermitian_eigenvalues(h2)[0]);
    if !(mu > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let lhs = hermitian_spectral_norm(&(inverse(h1)? - inverse(h2)?));
    let rhs = hermitian_spectral_norm(&(h1 - h2)) / (mu * mu);
    Ok((lhs, rhs))
}

/// Random checks of both inverse-perturbation lemmas on `n × n` matrices.
///
/// Returns `(lower-bound check, upper-bound check)`.
pub fn check_inverse_perturbation<R: Rng + ?Sized>(
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<(BoundCheck, BoundCheck)> {
    let mut lower = BoundCheck::new();
    let mut upper = BoundCheck::new();
    for _ in 0..trials {
        let a = random_pd(n, 1e-2, 1e2, rng);
        let c = random_pd(n, 1e-2, 1e2, rng);
        let (lhs, rhs) = inverse_perturbation_lower(&a, &(&c - &a))?;
        lower.record(rhs - lhs, lhs);

        let h1 = random_pd(n, 1e-2, 1e2, rng);
        let h2 = random_pd(n, 1e-2, 1e2, rng);
        let (lhs, rhs) = inverse_difference_upper(&h1, &h2)?;
        upper.record(lhs - rhs, rhs);
    }
    Ok((lower, upper))
}

/// Explicit constants certifying that the historical-average surrogate is
/// biased near `x⋆`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasCertificate {
    /// `μ = σ_n²`.
    pub mu: f64,
    /// `Λ = N_r Σ c_q + σ_n²`.
    pub lambda_upper: f64,
    pub lipschitz: f64,
    /// `c₁ = L_R/μ²`.
    pub c1: f64,
    /// `B = R̃ − R₀`.
    pub bias: CMatrix,
    /// `‖R₀^{-1/2} B R₀^{-1/2}‖`.
    pub a0: f64,
    /// `(1/Λ)·A₀/(1+A₀)`.
    pub c0: f64,
    /// `c₀/(4c₁)`.
    pub rho0: f64,
}

impl BiasCertificate {
    /// Computes the certificate from the true covariances at `x_star` and `anchors`.
    pub fn compute(x_star: &[f64], anchors: &[Apv], s: &ScenarioConfig) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::Empty("anchor list"));
        }
        let n = x_star.len();
        let r0 = true_covariance_matrix(x_star, s);
        let mut rt = CMatrix::zeros(n, n);
        for a in anchors {
            if a.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.len(),
                });
            }
            rt += true_covariance_matrix(a, s);
        }
        rt /= C64::new(anchors.len() as f64, 0.0);
        let bias = rt - &r0;
        let mu = s.sigma_n2();
        let cq: f64 = s
            .paths()
            .gains()
            .iter()
            .map(|g| s.sigma_s2() * g.norm_sqr())
            .sum::<f64>()
            + (0..s.jammers().len())
                .map(|i| s.jammers().powers()[i] * s.jammers().gains()[i].norm_sqr())
                .sum::<f64>();
        let lambda_upper = n as f64 * cq + mu;
        let lipschitz = lipschitz_constant(s, n);
        let c1 = lipschitz / (mu * mu);
        let ris = hermitian_inv_sqrt(&r0)?;
        let a0 = hermitian_spectral_norm(&(&ris * &bias * &ris));
        let c0 = a0 / (1.0 + a0) / lambda_upper;
        let rho0 = if c1 > 0.0 { c0 / (4.0 * c1) } else { f64::INFINITY };
        Ok(Self {
            mu,
            lambda_upper,
            lipschitz,
            c1,
            bias,
            a0,
            c0,
            rho0,
        })
    }

    /// Whether the certificate can certify anything (`A₀ > 0`).
    pub fn is_informative(&self) -> bool {
        self.a0 > 1e-12 && self.c0 > 0.0 && self.rho0.is_finite()
    }
}

/// Aggregate verdict of a geometric-bias check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasVerdict {
    /// `B = 0` (no anchor differs from `x⋆` in a non-translational way).
    PreconditionUnmet,
    Checked {
        samples: usize,
        passes: usize,
        /// Smallest `lhs − rhs` observed.
        min_margin: f64,
        /// Whether `μ I ⪯ R ⪯ Λ I` held at every covariance evaluated.
        spectral_bounds_hold: bool,
    },
}

impl BiasVerdict {
    pub fn all_passed(&self) -> bool {
        matches!(self, Self::Checked { samples, passes, .. } if samples == passes)
    }
}

/// Result of [`geometric_bias_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct BiasCheck {
    pub certificate: BiasCertificate,
    pub verdict: BiasVerdict,
}

/// Radii, as fractions of `ρ₀`, of the spheres on which `δ` is sampled.
pub const DELTA_RADII: [f64; 3] = [0.1, 0.5, 1.0];

/// Which covariances stand in for the local and averaged surrogates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasCovariances {
    True,
    /// Sample covariances from blocks of the given length.
    Sampled(usize),
}

fn spectral_bounds_hold(r: &CMatrix, mu: f64, lambda: f64) -> bool {
    let ev = hermitian_eigenvalues(r);
    ev[0] >= mu - 1e-10 * (1.0 + mu) && ev[ev.len() - 1] <= lambda + 1e-10 * (1.0 + lambda)
}

/// Tests `‖R̃⁻¹ − R_δ⁻¹‖ ≥ ‖R₀⁻¹ − R_δ⁻¹‖ + c₀/2` for `δ` drawn uniformly on the
/// spheres `‖δ‖ = f·ρ₀`, `f ∈` [`DELTA_RADII`], `samples_per_radius` each.
///
/// `R_δ = R(x⋆ + δ)` is always the true covariance; `R̃` and `R₀` are true or
/// sampled according to `which`.
pub fn geometric_bias_check<R: Rng + ?Sized>(
    x_star: &Apv,
    anchors: &[Apv],
    s: &ScenarioConfig,
    samples_per_radius: usize,
    which: BiasCovariances,
    rng: &mut R,
) -> Result<BiasCheck> {
    let certificate = BiasCertificate::compute(x_star, anchors, s)?;
    if !certificate.is_informative() {
        return Ok(BiasCheck {
            certificate,
            verdict: BiasVerdict::PreconditionUnmet,
        });
    }
    let n = x_star.len();
    let (r0, rt) = match which {
        BiasCovariances::True => {
            let r0 = true_covariance_matrix(x_star, s);
            let rt = &r0 + &certificate.bias;
            (r0, rt)
        }
        BiasCovariances::Sampled(t) => {
            let sample = |x: &Apv, rng: &mut R| -> Result<CMatrix> {
                let sym = SymbolBlock::draw(n, s, t, SymbolLaw::Gaussian, rng)?;
                Ok(sample_covariance_matrix(&sym.received(x, s)?))
            };
            let r0 = sample(x_star, rng)?;
            let mut rt = CMatrix::zeros(n, n);
            for a in anchors {
                rt += if a == x_star { r0.clone() } else { sample(a, rng)? };
            }
            rt /= C64::new(anchors.len() as f64, 0.0);
            (r0, rt)
        }
    };
    let mut bounds_ok = true;
    if which == BiasCovariances::True {
        bounds_ok &= spectral_bounds_hold(&r0, certificate.mu, certificate.lambda_upper);
        for a in anchors {
            bounds_ok &= spectral_bounds_hold(
                &true_covariance_matrix(a, s),
                certificate.mu,
                certificate.lambda_upper,
            );
        }
    }
    let r0_inv = inverse(&r0)?;
    let rt_inv = inverse(&rt)?;
    let mut samples = 0;
    let mut passes = 0;
    let mut min_margin = f64::INFINITY;
    for &f in &DELTA_RADII {
        let radius = f * certificate.rho0;
        for _ in 0..samples_per_radius {
            let u = random_unit(n, rng);
            let xd: Vec<f64> = x_star.iter().zip(&u).map(|(a, b)| a + radius * b).collect();
            let rd = true_covariance_matrix(&xd, s);
            bounds_ok &= spectral_bounds_hold(&rd, certificate.mu, certificate.lambda_upper);
            let rd_inv = inverse(&rd)?;
            let lhs = hermitian_spectral_norm(&(&rt_inv - &rd_inv));
            let rhs = hermitian_spectral_norm(&(&r0_inv - &rd_inv)) + certificate.c0 / 2.0;
            let margin = lhs - rhs;
            min_margin = min_margin.min(margin);
            samples += 1;
            if margin >= -BOUND_SLACK * (1.0 + rhs) {
                passes += 1;
            }
        }
    }
    Ok(BiasCheck {
        certificate,
        verdict: BiasVerdict::Checked {
            samples,
            passes,
            min_margin,
            spectral_bounds_hold: bounds_ok,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ula, GeometryConfig};
    use crate::model::{DesiredPaths, JammerSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lipschitz_plug_in_values() {
        let quiet = ScenarioConfig::new(1.0, 0.0, 1.0, DesiredPaths::single(0.3), JammerSet::none())
            .unwrap();
        assert_eq!(lipschitz_constant(&quiet, 4), 0.0);
        let j = JammerSet::new(alloc::vec![PI / 2.0], alloc::vec![C64::new(1.0, 0.0)], alloc::vec![1.0])
            .unwrap();
        let s = ScenarioConfig::new(1.0, 0.0, 1.0, DesiredPaths::single(0.3), j).unwrap();
        assert!((lipschitz_constant(&s, 4) - 8.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn steering_bound_is_tight_at_trivial_points() {
        let k = 2.0 * PI;
        let x = [0.3, 1.2];
        let lhs = (steering_vector(&x, 0.0, k) - steering_vector(&[2.0, 5.0], 0.0, k)).norm();
        assert_eq!(lhs, 0.0);
        let lhs = (steering_vector(&x, 0.7, k) - steering_vector(&x, 0.7, k)).norm();
        assert_eq!(lhs, 0.0);
    }

    #[test]
    fn inverse_perturbation_scalar_and_zero_cases() {
        let one = CMatrix::identity(1, 1);
        let (lhs, rhs) = inverse_perturbation_lower(&one, &one).unwrap();
        assert!((lhs - 0.5).abs() < 1e-15 && (rhs - 0.5).abs() < 1e-15);
        let a = CMatrix::identity(3, 3) * C64::new(2.0, 0.0);
        let (lhs, rhs) = inverse_perturbation_lower(&a, &CMatrix::zeros(3, 3)).unwrap();
        assert!(lhs.abs() < 1e-15 && rhs.abs() < 1e-15);
    }

    #[test]
    fn coincident_anchors_leave_precondition_unmet() {
        let g = GeometryConfig::new(4, 0.5, 4.0).unwrap();
        let x = ula(&g);
        let j = JammerSet::new(alloc::vec![0.9], alloc::vec![C64::new(1.0, 0.0)], alloc::vec![3.0])
            .unwrap();
        let s = ScenarioConfig::new(1.0, 1.0, 1.0, DesiredPaths::single(0.4), j).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let check = geometric_bias_check(
            &x,
            &[x.clone(), x.clone()],
            &s,
            4,
            BiasCovariances::True,
            &mut rng,
        )
        .unwrap();
        assert_eq!(check.certificate.a0, 0.0);
        assert_eq!(check.certificate.c0, 0.0);
        assert_eq!(check.verdict, BiasVerdict::PreconditionUnmet);
    }

    #[test]
    fn random_pd_spectrum_within_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_pd(5, 1e-2, 1e2, &mut rng);
        let ev = hermitian_eigenvalues(&m);
        assert!(ev[0] >= 1e-2 * (1.0 - 1e-9) && ev[4] <= 1e2 * (1.0 + 1e-9));
        let q = random_unitary(4, &mut rng);
        assert!((q.adjoint() * &q - CMatrix::identity(4, 4)).norm() < 1e-12);
    }
}
