//! Narrowband linear-array signal model: steering vectors, desired and
//! jamming channels, covariances, snapshot synthesis and MVDR beamforming.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::ComplexFloat;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::Apv;
use crate::linalg::{hermitize, CMatrix, CVector, Cholesky, C64};

/// Multipath components of the desired user's channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredPaths {
    angles: Vec<f64>,
    gains: Vec<C64>,
}

impl DesiredPaths {
    pub fn new(angles: Vec<f64>, gains: Vec<C64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidScenario("at least one desired path is required"));
        }
        if angles.len() != gains.len() {
            return Err(Error::InvalidScenario("path angle and gain counts differ"));
        }
        if angles.iter().any(|a| !a.is_finite()) || gains.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidScenario("non-finite path parameter"));
        }
        Ok(Self { angles, gains })
    }

    /// Single path with unit gain.
    pub fn single(angle: f64) -> Self {
        Self {
            angles: alloc::vec![angle],
            gains: alloc::vec![C64::new(1.0, 0.0)],
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn gains(&self) -> &[C64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Euclidean norm of the gain vector.
    pub fn gain_norm(&self) -> f64 {
        libm::sqrt(self.gains.iter().map(|g| g.norm_sqr()).sum::<f64>())
    }
}

/// Directional jammers with complex gains and transmit powers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JammerSet {
    angles: Vec<f64>,
    gains: Vec<C64>,
    powers: Vec<f64>,
}

impl JammerSet {
    pub fn new(angles: Vec<f64>, gains: Vec<C64>, powers: Vec<f64>) -> Result<Self> {
        if angles.len() != gains.len() || angles.len() != powers.len() {
            return Err(Error::InvalidScenario("jammer angle, gain and power counts differ"));
        }
        if powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidScenario("jammer powers must be finite and nonnegative"));
        }
        if angles.iter().any(|a| !a.is_finite()) || gains.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidScenario("non-finite jammer parameter"));
        }
        Ok(Self {
            angles,
            gains,
            powers,
        })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn gains(&self) -> &[C64] {
        &self.gains
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Full propagation scenario for one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    wavelength: f64,
    sigma_s2: f64,
    sigma_n2: f64,
    paths: DesiredPaths,
    jammers: JammerSet,
}

impl ScenarioConfig {
    pub fn new(
        wavelength: f64,
        sigma_s2: f64,
        sigma_n2: f64,
        paths: DesiredPaths,
        jammers: JammerSet,
    ) -> Result<Self> {
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::InvalidScenario("wavelength must be positive"));
        }
        if !(sigma_s2 >= 0.0) || !sigma_s2.is_finite() {
            return Err(Error::InvalidScenario("signal power must be nonnegative"));
        }
        if !(sigma_n2 > 0.0) || !sigma_n2.is_finite() {
            return Err(Error::InvalidScenario("noise power must be positive"));
        }
        Ok(Self {
            wavelength,
            sigma_s2,
            sigma_n2,
            paths,
            jammers,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// `k = 2π/λ`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn sigma_s2(&self) -> f64 {
        self.sigma_s2
    }

    pub fn sigma_n2(&self) -> f64 {
        self.sigma_n2
    }

    pub fn paths(&self) -> &DesiredPaths {
        &self.paths
    }

    pub fn jammers(&self) -> &JammerSet {
        &self.jammers
    }

    /// Copy of the scenario with a different desired-signal power.
    pub fn with_signal_power(&self, sigma_s2: f64) -> Result<Self> {
        Self::new(
            self.wavelength,
            sigma_s2,
            self.sigma_n2,
            self.paths.clone(),
            self.jammers.clone(),
        )
    }
}

/// `a(x, θ)_n = exp(j k x_n sin θ)`.
pub fn steering_vector(x: &[f64], theta: f64, k: f64) -> CVector {
    let s = libm::sin(theta);
    CVector::from_iterator(x.len(), x.iter().map(|&xn| C64::cis(k * xn * s)))
}

/// Desired channel `h0(x) = Σ_ℓ α_ℓ a(x, θ_ℓ)`.
pub fn desired_channel(x: &[f64], paths: &DesiredPaths, k: f64) -> CVector {
    let mut h = CVector::zeros(x.len());
    for (&theta, &alpha) in paths.angles.iter().zip(&paths.gains) {
        let s = libm::sin(theta);
        for (hn, &xn) in h.iter_mut().zip(x) {
            *hn += alpha * C64::cis(k * xn * s);
        }
    }
    h
}

/// Jamming channel `g_i(x) = ζ_i a(x, φ_i)`.
pub fn jammer_channel(x: &[f64], index: usize, jammers: &JammerSet, k: f64) -> Result<CVector> {
    if index >= jammers.len() {
        return Err(Error::IndexOutOfRange {
            index,
            len: jammers.len(),
        });
    }
    Ok(steering_vector(x, jammers.angles[index], k) * jammers.gains[index])
}

/// Hermitian positive definite matrix together with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedCovariance {
    matrix: CMatrix,
    loading: f64,
    chol: Cholesky,
}

impl FactorizedCovariance {
    /// Adds `loading·I` to `matrix` and factors the result.
    pub fn new(mut matrix: CMatrix, loading: f64) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.ncols(),
            });
        }
        if n == 0 {
            return Err(Error::Empty("covariance dimension"));
        }
        if !(loading >= 0.0) || !loading.is_finite() {
            return Err(Error::InvalidScenario("diagonal loading must be nonnegative"));
        }
        hermitize(&mut matrix);
        for i in 0..n {
            matrix[(i, i)].re += loading;
        }
        let chol = Cholesky::new(&matrix).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            matrix,
            loading,
            chol,
        })
    }

    /// The factored matrix, loading included.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn loading(&self) -> f64 {
        self.loading
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `R⁻¹ b`.
    pub fn solve(&self, b: &CVector) -> CVector {
        self.chol.solve(b)
    }

    /// `bᴴ R⁻¹ b`.
    pub fn inverse_quadratic_form(&self, b: &CVector) -> f64 {
        self.chol.inverse_quadratic_form(b)
    }

    pub fn inverse(&self) -> CMatrix {
        self.chol.inverse()
    }
}

fn add_outer(r: &mut CMatrix, v: &CVector, scale: f64) {
    let n = v.len();
    for j in 0..n {
        let vj = v[j].conj() * scale;
        for i in 0..n {
            r[(i, j)] += v[i] * vj;
        }
    }
}

/// `R_{i+n}(x) = Σ σ_i² g_i g_iᴴ + σ_n² I` as a plain matrix.
pub fn interference_plus_noise_matrix(x: &[f64], s: &ScenarioConfig) -> CMatrix {
    let n = x.len();
    let k = s.wavenumber();
    let mut r = CMatrix::identity(n, n) * C64::new(s.sigma_n2, 0.0);
    for i in 0..s.jammers.len() {
        let g = steering_vector(x, s.jammers.angles[i], k) * s.jammers.gains[i];
        add_outer(&mut r, &g, s.jammers.powers[i]);
    }
    r
}

/// `R(x) = σ_s² h0 h0ᴴ + Σ σ_i² g_i g_iᴴ + σ_n² I` as a plain matrix.
pub fn true_covariance_matrix(x: &[f64], s: &ScenarioConfig) -> CMatrix {
    let mut r = interference_plus_noise_matrix(x, s);
    let h0 = desired_channel(x, &s.paths, s.wavenumber());
    add_outer(&mut r, &h0, s.sigma_s2);
    r
}

/// True received covariance at `x`.
pub fn true_covariance(x: &[f64], s: &ScenarioConfig) -> Result<FactorizedCovariance> {
    FactorizedCovariance::new(true_covariance_matrix(x, s), 0.0)
}

/// Interference-plus-noise covariance at `x`.
pub fn interference_plus_noise_covariance(
    x: &[f64],
    s: &ScenarioConfig,
) -> Result<FactorizedCovariance> {
    FactorizedCovariance::new(interference_plus_noise_matrix(x, s), 0.0)
}

/// Distribution of the desired and jamming symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymbolLaw {
    /// Circular complex Gaussian.
    #[default]
    Gaussian,
    /// Equiprobable unit-energy QPSK, scaled by the source amplitude.
    Qpsk,
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let sd = libm::sqrt(variance / 2.0);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(sd * re, sd * im)
}

fn symbol<R: Rng + ?Sized>(rng: &mut R, law: SymbolLaw, variance: f64) -> C64 {
    match law {
        SymbolLaw::Gaussian => complex_gaussian(rng, variance),
        SymbolLaw::Qpsk => {
            let a = libm::sqrt(variance / 2.0);
            let re = if rng.random::<bool>() { a } else { -a };
            let im = if rng.random::<bool>() { a } else { -a };
            C64::new(re, im)
        }
    }
}

/// Source symbols and receiver noise for one block, independent of where the
/// antennas are.
///
/// Drawing the symbols once and forming snapshots for any position lets
/// several optimizers observe the same realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    desired: Vec<C64>,
    jamming: CMatrix,
    noise: CMatrix,
}

impl SymbolBlock {
    /// Draws `t` snapshots' worth of symbols for an `antennas`-element array.
    ///
    /// The desired stream is drawn first, then each jammer's stream, then the
    /// noise in column-major order.
    pub fn draw<R: Rng + ?Sized>(
        antennas: usize,
        s: &ScenarioConfig,
        t: usize,
        law: SymbolLaw,
        rng: &mut R,
    ) -> Result<Self> {
        if t == 0 {
            return Err(Error::Empty("snapshot count"));
        }
        if antennas == 0 {
            return Err(Error::Empty("antenna count"));
        }
        let desired = (0..t).map(|_| symbol(rng, law, s.sigma_s2)).collect();
        let ni = s.jammers.len();
        let mut jamming = CMatrix::zeros(ni, t);
        for i in 0..ni {
            for c in 0..t {
                jamming[(i, c)] = symbol(rng, law, s.jammers.powers[i]);
            }
        }
        let mut noise = CMatrix::zeros(antennas, t);
        for c in 0..t {
            for r in 0..antennas {
                noise[(r, c)] = complex_gaussian(rng, s.sigma_n2);
            }
        }
        Ok(Self {
            desired,
            jamming,
            noise,
        })
    }

    pub fn snapshots(&self) -> usize {
        self.desired.len()
    }

    pub fn antennas(&self) -> usize {
        self.noise.nrows()
    }

    /// Received block `r(x, t) = h0 s0(t) + Σ g_i s_i(t) + n(t)` at `x`.
    pub fn received(&self, x: &[f64], s: &ScenarioConfig) -> Result<CMatrix> {
        if x.len() != self.antennas() {
            return Err(Error::DimensionMismatch {
                expected: self.antennas(),
                found: x.len(),
            });
        }
        if s.jammers.len() != self.jamming.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.jamming.nrows(),
                found: s.jammers.len(),
            });
        }
        let k = s.wavenumber();
        let mut y = self.noise.clone();
        let h0 = desired_channel(x, &s.paths, k);
        for (c, &s0) in self.desired.iter().enumerate() {
            for r in 0..y.nrows() {
                y[(r, c)] += h0[r] * s0;
            }
        }
        for i in 0..self.jamming.nrows() {
            let g = steering_vector(x, s.jammers.angles[i], k) * s.jammers.gains[i];
            for c in 0..y.ncols() {
                let si = self.jamming[(i, c)];
                for r in 0..y.nrows() {
                    y[(r, c)] += g[r] * si;
                }
            }
        }
        Ok(y)
    }
}

/// `T` received snapshots collected at one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBlock {
    data: CMatrix,
    anchor: Apv,
    index: usize,
}

impl SnapshotBlock {
    pub fn new(data: CMatrix, anchor: Apv, index: usize) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::Empty("snapshot count"));
        }
        if data.nrows() != anchor.len() {
            return Err(Error::DimensionMismatch {
                expected: anchor.len(),
                found: data.nrows(),
            });
        }
        Ok(Self {
            data,
            anchor,
            index,
        })
    }

    /// `N_r × T` matrix whose columns are the snapshots.
    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn anchor(&self) -> &Apv {
        &self.anchor
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn snapshots(&self) -> usize {
        self.data.ncols()
    }
}

/// Draws a fresh block of `t` snapshots at `x`.
pub fn generate_snapshots<R: Rng + ?Sized>(
    x: &Apv,
    s: &ScenarioConfig,
    t: usize,
    law: SymbolLaw,
    index: usize,
    rng: &mut R,
) -> Result<SnapshotBlock> {
    let symbols = SymbolBlock::draw(x.len(), s, t, law, rng)?;
    SnapshotBlock::new(symbols.received(x, s)?, x.clone(), index)
}

/// `(1/T) Σ r rᴴ`, without loading.
pub fn sample_covariance_matrix(data: &CMatrix) -> CMatrix {
    let t = data.ncols() as f64;
    let mut r = data * data.adjoint();
    r /= C64::new(t, 0.0);
    hermitize(&mut r);
    r
}

/// Sample covariance `R̂ = (1/T) Σ r rᴴ + ε_load I`.
pub fn sample_covariance(b: &SnapshotBlock, loading: f64) -> Result<FactorizedCovariance> {
    FactorizedCovariance::new(sample_covariance_matrix(&b.data), loading)
}

/// As [`sample_covariance`], retrying with `1e-6·tr(R̂)/N_r` loading when the
/// requested loading leaves the estimate singular.
pub fn sample_covariance_with_fallback(
    b: &SnapshotBlock,
    loading: f64,
) -> Result<FactorizedCovariance> {
    let r = sample_covariance_matrix(&b.data);
    match FactorizedCovariance::new(r.clone(), loading) {
        Ok(c) => Ok(c),
        Err(Error::NotPositiveDefinite) => {
            let n = r.nrows() as f64;
            let trace: f64 = (0..r.nrows()).map(|i| r[(i, i)].re).sum();
            let fallback = 1e-6 * trace / n;
            FactorizedCovariance::new(r, loading.max(fallback))
        }
        Err(e) => Err(e),
    }
}

/// Receive beamforming weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    w: CVector,
}

impl BeamformerWeights {
    pub fn new(w: CVector) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario("non-finite beamformer weight"));
        }
        Ok(Self { w })
    }

    pub fn as_vector(&self) -> &CVector {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// `w = R⁻¹ h0 / (h0ᴴ R⁻¹ h0)`.
pub fn mvdr_weights(r: &FactorizedCovariance, h0: &CVector) -> Result<BeamformerWeights> {
    if h0.len() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim(),
            found: h0.len(),
        });
    }
    if h0.iter().all(|v| *v == C64::new(0.0, 0.0)) {
        return Err(Error::ZeroChannel);
    }
    let z = r.solve(h0);
    let denom = h0.dotc(&z).re;
    BeamformerWeights::new(z / C64::new(denom, 0.0))
}

/// Output SINR `σ_s²|wᴴh0|² / (wᴴ R_{i+n} w)` under the true scenario.
pub fn output_sinr(w: &BeamformerWeights, x: &[f64], s: &ScenarioConfig) -> Result<f64> {
    let w = &w.w;
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: w.len(),
        });
    }
    let k = s.wavenumber();
    let h0 = desired_channel(x, &s.paths, k);
    let signal = s.sigma_s2 * w.dotc(&h0).norm_sqr();
    let mut denom = s.sigma_n2 * w.norm_squared();
    for i in 0..s.jammers.len() {
        let g = steering_vector(x, s.jammers.angles[i], k) * s.jammers.gains[i];
        denom += s.jammers.powers[i] * w.dotc(&g).norm_sqr();
    }
    Ok(signal / denom)
}

/// `10 log10(v)`.
pub fn to_db(v: f64) -> f64 {
    10.0 * libm::log10(v)
}

/// `|wᴴ a(x, θ)|`.
pub fn array_response(w: &BeamformerWeights, x: &[f64], theta: f64, k: f64) -> f64 {
    w.w.dotc(&steering_vector(x, theta, k)).abs()
}

/// Peak-normalized beampattern in dB over `grid`.
pub fn beampattern(w: &BeamformerWeights, x: &[f64], grid: &[f64], k: f64) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::Empty("angle grid"));
    }
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: w.len(),
        });
    }
    let mags: Vec<f64> = grid.iter().map(|&t| array_response(w, x, t, k)).collect();
    let peak = mags.iter().fold(0.0_f64, |m, &v| m.max(v));
    Ok(mags
        .iter()
        .map(|&m| {
            if peak > 0.0 {
                20.0 * libm::log10((m / peak).max(1e-300))
            } else {
                0.0
            }
        })
        .collect())
}
