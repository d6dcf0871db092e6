//! Spacing and aperture constraints on a linear movable-antenna array, and the
//! exact Euclidean projection onto them.

use alloc::vec::Vec;
use core::ops::Deref;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{RMatrix, RVector};

/// Slack admitted by feasibility checks, in length units.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Antenna count, minimum spacing and aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    antennas: usize,
    spacing: f64,
    aperture: f64,
}

impl GeometryConfig {
    pub fn new(antennas: usize, spacing: f64, aperture: f64) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::InvalidGeometry("at least one antenna is required"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidGeometry("minimum spacing must be positive"));
        }
        if !aperture.is_finite() || aperture < (antennas - 1) as f64 * spacing {
            return Err(Error::InfeasibleGeometry {
                antennas,
                spacing,
                aperture,
            });
        }
        Ok(Self {
            antennas,
            spacing,
            aperture,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }
}

/// A feasible antenna position vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Apv {
    x: Vec<f64>,
}

impl Apv {
    /// Validates `x` against `g`.
    pub fn new(x: Vec<f64>, g: &GeometryConfig) -> Result<Self> {
        let report = is_feasible(&x, g)?;
        match report.violations.first() {
            None => Ok(Self { x }),
            Some(v) => Err(Error::InfeasiblePoint {
                row: v.row,
                excess: v.excess,
            }),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }

    pub fn to_vector(&self) -> RVector {
        RVector::from_column_slice(&self.x)
    }
}

impl Deref for Apv {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.x
    }
}

/// One row of `U x ⪯ l`: `x[plus] − x[minus] ≤ bound`, with absent indices
/// contributing zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintRow {
    pub plus: Option<usize>,
    pub minus: Option<usize>,
    pub bound: f64,
}

impl ConstraintRow {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.plus.map_or(0.0, |i| x[i]) - self.minus.map_or(0.0, |i| x[i])
    }
}

/// Sparse sign matrix `U` and bounds `l` describing the feasible set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    dim: usize,
    rows: Vec<ConstraintRow>,
}

impl ConstraintSystem {
    pub fn rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense `(U, l)`.
    pub fn to_dense(&self) -> (RMatrix, RVector) {
        let mut u = RMatrix::zeros(self.rows.len(), self.dim);
        let mut l = RVector::zeros(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            if let Some(i) = row.plus {
                u[(r, i)] = 1.0;
            }
            if let Some(i) = row.minus {
                u[(r, i)] = -1.0;
            }
            l[r] = row.bound;
        }
        (u, l)
    }
}

/// Builds the `N_r + 1` constraints: consecutive spacing rows, then `x₁ ≥ 0`,
/// then `x_{N_r} ≤ D_x`.
pub fn build_constraints(g: &GeometryConfig) -> ConstraintSystem {
    let n = g.antennas;
    let mut rows = Vec::with_capacity(n + 1);
    for m in 0..n - 1 {
        rows.push(ConstraintRow {
            plus: Some(m),
            minus: Some(m + 1),
            bound: -g.spacing,
        });
    }
    rows.push(ConstraintRow {
        plus: None,
        minus: Some(0),
        bound: 0.0,
    });
    rows.push(ConstraintRow {
        plus: Some(n - 1),
        minus: None,
        bound: g.aperture,
    });
    ConstraintSystem { dim: n, rows }
}

/// Uniform linear array `[0, d, …, (N_r−1)d]`.
pub fn ula(g: &GeometryConfig) -> Apv {
    Apv {
        x: (0..g.antennas).map(|i| i as f64 * g.spacing).collect(),
    }
}

/// A violated constraint row and the amount by which it is exceeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub row: usize,
    pub excess: f64,
}

/// Outcome of a feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `U x ⪯ l` with slack [`FEASIBILITY_TOL`].
pub fn is_feasible(x: &[f64], g: &GeometryConfig) -> Result<FeasibilityReport> {
    if x.len() != g.antennas {
        return Err(Error::DimensionMismatch {
            expected: g.antennas,
            found: x.len(),
        });
    }
    let mut violations = Vec::new();
    for (row, c) in build_constraints(g).rows.iter().enumerate() {
        let v = c.evaluate(x);
        let excess = v - c.bound;
        if !(excess <= FEASIBILITY_TOL) {
            violations.push(Violation { row, excess });
        }
    }
    Ok(FeasibilityReport { violations })
}

/// Least-squares nondecreasing fit (pool adjacent violators, unit weights).
pub fn isotonic_regression(y: &[f64]) -> Vec<f64> {
    // Blocks as (sum, count); merged left to right.
    let mut sums: Vec<f64> = Vec::with_capacity(y.len());
    let mut counts: Vec<usize> = Vec::with_capacity(y.len());
    for &v in y {
        sums.push(v);
        counts.push(1);
        while sums.len() > 1 {
            let n = sums.len();
            let last = sums[n - 1] / counts[n - 1] as f64;
            let prev = sums[n - 2] / counts[n - 2] as f64;
            if prev <= last {
                break;
            }
            let s = sums.pop().unwrap();
            let c = counts.pop().unwrap();
            sums[n - 2] += s;
            counts[n - 2] += c;
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (s, c) in sums.iter().zip(&counts) {
        let m = s / *c as f64;
        out.extend(core::iter::repeat_n(m, *c));
    }
    out
}

/// Euclidean projection of `trial` onto the feasible set of `g`.
///
/// Substitutes `y_n = x_n − n·d` (1-based `n`), fits a nondecreasing `y` by
/// PAVA, clamps it to `[−d, D_x − N_r d]` and maps back.
pub fn project(trial: &[f64], g: &GeometryConfig) -> Result<Apv> {
    if trial.len() != g.antennas {
        return Err(Error::DimensionMismatch {
            expected: g.antennas,
            found: trial.len(),
        });
    }
    if trial.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGeometry("projection input must be finite"));
    }
    let d = g.spacing;
    let shifted: Vec<f64> = trial
        .iter()
        .enumerate()
        .map(|(i, &v)| v - (i + 1) as f64 * d)
        .collect();
    let lo = -d;
    let hi = g.aperture - g.antennas as f64 * d;
    let x = isotonic_regression(&shifted)
        .into_iter()
        .enumerate()
        .map(|(i, y)| y.clamp(lo, hi) + (i + 1) as f64 * d)
        .collect();
    Ok(Apv { x })
}

/// Uniform draw over the feasible set: sorted uniform offsets in
/// `[0, D_x − (N_r−1)d]` plus the minimum spacings.
pub fn random_feasible<R: Rng + ?Sized>(g: &GeometryConfig, rng: &mut R) -> Apv {
    let slack = g.aperture - (g.antennas - 1) as f64 * g.spacing;
    let mut u: Vec<f64> = (0..g.antennas).map(|_| rng.random::<f64>() * slack).collect();
    u.sort_by(f64::total_cmp);
    Apv {
        x: u.iter()
            .enumerate()
            .map(|(i, &v)| v + i as f64 * g.spacing)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_patterns() {
        let g = GeometryConfig::new(2, 0.5, 3.0).unwrap();
        let (u, l) = build_constraints(&g).to_dense();
        assert_eq!(
            u,
            RMatrix::from_row_slice(3, 2, &[1.0, -1.0, -1.0, 0.0, 0.0, 1.0])
        );
        assert_eq!(l, RVector::from_column_slice(&[-0.5, 0.0, 3.0]));

        let g = GeometryConfig::new(1, 0.5, 2.0).unwrap();
        let (u, l) = build_constraints(&g).to_dense();
        assert_eq!(u, RMatrix::from_row_slice(2, 1, &[-1.0, 1.0]));
        assert_eq!(l, RVector::from_column_slice(&[0.0, 2.0]));
    }

    #[test]
    fn infeasible_config_rejected() {
        assert!(matches!(
            GeometryConfig::new(5, 0.5, 1.9),
            Err(Error::InfeasibleGeometry { .. })
        ));
        assert!(GeometryConfig::new(5, 0.5, 2.0).is_ok());
        assert!(GeometryConfig::new(0, 0.5, 2.0).is_err());
        assert!(GeometryConfig::new(2, 0.0, 2.0).is_err());
    }

    #[test]
    fn ula_positions() {
        let g = GeometryConfig::new(4, 0.5, 8.0).unwrap();
        assert_eq!(ula(&g).as_slice(), &[0.0, 0.5, 1.0, 1.5]);
        let g1 = GeometryConfig::new(1, 0.5, 8.0).unwrap();
        assert_eq!(ula(&g1).as_slice(), &[0.0]);
        assert!(is_feasible(&ula(&g), &g).unwrap().is_feasible());
    }

    #[test]
    fn feasibility_reports() {
        let g = GeometryConfig::new(3, 0.5, 4.0).unwrap();
        let r = is_feasible(&[1.0, 1.0, 2.0], &g).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].row, 0);
        assert!(is_feasible(&[0.0, 1.0, 4.0], &g).unwrap().is_feasible());
        let r = is_feasible(&[-0.1, 1.0, 4.5], &g).unwrap();
        let rows: Vec<usize> = r.violations.iter().map(|v| v.row).collect();
        assert_eq!(rows, [2, 3]);
        assert!(matches!(
            Apv::new(alloc::vec![0.0, 0.2, 1.0], &g),
            Err(Error::InfeasiblePoint { row: 0, .. })
        ));
    }

    #[test]
    fn pava_pools_violators() {
        assert_eq!(isotonic_regression(&[1.0, 3.0, 2.0, 4.0]), [1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_regression(&[3.0, 2.0, 1.0]), [2.0, 2.0, 2.0]);
        assert!(isotonic_regression(&[]).is_empty());
    }

    #[test]
    fn projection_of_coincident_triple_centers() {
        let g = GeometryConfig::new(3, 0.5, 4.0).unwrap();
        let p = project(&[1.0, 1.0, 1.0], &g).unwrap();
        for (a, b) in p.iter().zip([0.5, 1.0, 1.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_leaves_feasible_points() {
        let g = GeometryConfig::new(4, 0.5, 5.0).unwrap();
        let x = [0.2, 1.0, 2.5, 5.0];
        let p = project(&x, &g).unwrap();
        assert!(p.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-15));
    }
}
