use antijam_core::baselines::*;
use antijam_core::geometry::{is_feasible, random_feasible, ula, Apv, GeometryConfig};
use antijam_core::linalg::{CMatrix, RMatrix, RVector, C64};
use antijam_core::model::*;
use antijam_core::objective::{true_value, SurrogateContext};
use antijam_core::trsolver::{ptrso, StopReason, TrustRegionConfig};
use antijam_oracles as oracle;
use antijam_oracles::Quadratic;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Concave quadratic on a wide geometry whose maximizer `c` is strictly feasible.
fn interior_quadratic(rng: &mut ChaCha8Rng) -> (Quadratic, GeometryConfig, Apv, Vec<f64>) {
    let g = GeometryConfig::new(4, 0.5, 12.0).unwrap();
    let c = vec![1.0, 3.0, 5.5, 8.0];
    let a = RMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() - 0.5);
    let h = -(&a * a.transpose() + RMatrix::identity(4, 4));
    let x0 = ula(&g);
    let d = RVector::from_iterator(4, x0.iter().zip(&c).map(|(x, c)| x - c));
    let q = Quadratic {
        x0: x0.to_vec(),
        g: &h * d,
        h,
    };
    (q, g, x0, c)
}

#[test]
fn pgd_converges_to_interior_quadratic_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let (q, g, x0, c) = interior_quadratic(&mut rng);
        let ls = LineSearchConfig {
            grad_tol: 1e-9,
            step_tol: 1e-12,
            ..LineSearchConfig::default()
        };
        let out = pgd(&x0, &q, &g, &ls, 5000).unwrap();
        let err = out.x.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "pgd error {err}");
    }
}

#[test]
fn newton_reaches_quadratic_optimum_in_one_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let (q, g, x0, c) = interior_quadratic(&mut rng);
        let out = projected_newton(&x0, &q, &g, &LineSearchConfig::default(), 1).unwrap();
        assert_eq!(out.iterations(), 1);
        assert!(out.trace[0].accepted);
        assert_eq!(out.trace[0].inner_iterations, 0);
        let err = out.x.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "newton error {err}");
    }
}

#[test]
fn zero_gradient_start_is_returned_unchanged() {
    let g = GeometryConfig::new(3, 0.5, 6.0).unwrap();
    let x0 = ula(&g);
    let q = Quadratic {
        x0: x0.to_vec(),
        g: RVector::zeros(3),
        h: -RMatrix::identity(3, 3),
    };
    for out in [
        pgd(&x0, &q, &g, &LineSearchConfig::default(), 100).unwrap(),
        projected_newton(&x0, &q, &g, &LineSearchConfig::default(), 100).unwrap(),
    ] {
        assert_eq!(out.x, x0);
        assert_eq!(out.stop, StopReason::SmallGradient);
        assert_eq!(out.values.len(), 1);
    }
}

#[test]
fn infeasible_start_is_rejected() {
    let g = GeometryConfig::new(3, 0.5, 6.0).unwrap();
    let q = Quadratic {
        x0: vec![0.0; 3],
        g: RVector::from_element(3, 1.0),
        h: -RMatrix::identity(3, 3),
    };
    let bad = Apv::new(vec![0.0, 0.1, 3.0], &g);
    if let Ok(bad) = bad {
        assert!(pgd(&bad, &q, &g, &LineSearchConfig::default(), 10).is_err());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = oracle::random_scenario(&mut rng, 2, 1, 0.0, 10.0);
    let other = GeometryConfig::new(4, 0.5, 6.0).unwrap();
    let cov = true_covariance(&ula(&other), &s).unwrap();
    let ctx = SurrogateContext::new(ula(&other), cov, s.paths().clone(), s.wavenumber()).unwrap();
    assert!(projected_newton(&ula(&g), &ctx, &g, &LineSearchConfig::default(), 10).is_err());
}

#[test]
fn newton_direction_ascends_on_surrogate_hessians() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut indefinite = 0;
    for _ in 0..200 {
        let s = oracle::random_scenario(&mut rng, 8, 8, 0.0, 10.0);
        let (g, x) = oracle::random_apv(&mut rng, 8, 8.0);
        let cov = FactorizedCovariance::new(oracle::random_wishart(&mut rng, 8, 16, 0.1), 0.0).unwrap();
        let ctx = SurrogateContext::new(x.clone(), cov, s.paths().clone(), s.wavenumber()).unwrap();
        let y = random_feasible(&g, &mut rng);
        let grad = ctx.gradient(&y);
        let h = ctx.hessian(&y);
        if h.clone().symmetric_eigen().eigenvalues.max() > 0.0 {
            indefinite += 1;
        }
        let (p, tau) = newton_direction(&grad, &h).unwrap();
        assert!(tau >= 1e-8);
        assert!(grad.dot(&p) > 0.0);
    }
    assert!(indefinite > 0);
}

#[test]
fn average_matches_entrywise_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for m in 1..=6 {
        let mats: Vec<CMatrix> = (0..m).map(|_| oracle::random_wishart(&mut rng, 6, 10, 0.05)).collect();
        let covs: Vec<_> = mats
            .iter()
            .map(|r| FactorizedCovariance::new(r.clone(), 0.0).unwrap())
            .collect();
        let avg = historical_average_covariance(&covs).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = C64::new(0.0, 0.0);
                for r in &mats {
                    acc += r[(i, j)];
                }
                let want = acc / m as f64;
                assert!((avg.matrix()[(i, j)] - want).norm() <= 1e-14 * (1.0 + want.norm()));
            }
        }
        assert_eq!(avg.loading(), 0.0);
    }
}

#[test]
fn single_block_history_reproduces_local_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let s = oracle::random_scenario(&mut rng, 8, 8, 0.0, 10.0);
        let g = GeometryConfig::new(8, 0.5, 8.0).unwrap();
        let x0 = ula(&g);
        let b = generate_snapshots(&x0, &s, 100, SymbolLaw::Gaussian, 0, &mut rng).unwrap();
        let cov = sample_covariance(&b, 0.0).unwrap();
        let cfg = TrustRegionConfig::for_geometry(1.0, &g);
        let ctx = SurrogateContext::new(x0.clone(), cov.clone(), s.paths().clone(), s.wavenumber()).unwrap();
        let local = ptrso(&x0, &ctx, &g, &cfg).unwrap();
        let hist = ptrso_historical(&x0, &[cov], s.paths(), s.wavenumber(), &g, &cfg).unwrap();
        assert_eq!(local.x, hist.x);
        assert_eq!(local.trace, hist.trace);
    }
}

#[test]
fn average_surrogate_is_farther_from_truth_near_current_anchor() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let draws = 500;
    let mut worse = 0;
    for _ in 0..draws {
        let s = oracle::random_scenario(&mut rng, 8, 8, 0.0, 10.0);
        let g = GeometryConfig::new(8, 0.5, 8.0).unwrap();
        let x_star = random_feasible(&g, &mut rng);
        let mut history: Vec<FactorizedCovariance> = (0..2)
            .map(|_| true_covariance(&random_feasible(&g, &mut rng), &s).unwrap())
            .collect();
        let local = true_covariance(&x_star, &s).unwrap();
        history.push(local.clone());
        let avg = historical_average_covariance(&history).unwrap();
        let k = s.wavenumber();
        let u: Vec<f64> = (0..8).map(|_| rng.random::<f64>() - 0.5).collect();
        let un = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let x: Vec<f64> = x_star.iter().zip(&u).map(|(a, b)| a + 0.01 * b / un).collect();
        let h = desired_channel(&x, s.paths(), k);
        let truth = true_value(&x, &s).unwrap();
        let e_avg = (avg.inverse_quadratic_form(&h) - truth).abs();
        let e_loc = (local.inverse_quadratic_form(&h) - truth).abs();
        if e_avg > e_loc {
            worse += 1;
        }
    }
    assert!(worse as f64 >= 0.95 * draws as f64, "{worse}/{draws}");
}

fn surrogate_instance(seed: u64) -> (GeometryConfig, SurrogateContext, Apv) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=8);
    let s = oracle::random_scenario(&mut rng, 4, 4, 0.0, 10.0);
    let (g, x) = oracle::random_apv(&mut rng, n, n as f64);
    let cov = FactorizedCovariance::new(oracle::random_wishart(&mut rng, n, 2 * n, 0.1), 0.0).unwrap();
    let ctx = SurrogateContext::new(x.clone(), cov, s.paths().clone(), s.wavenumber()).unwrap();
    (g, ctx, x)
}

fn check_run(g: &GeometryConfig, ctx: &SurrogateContext, out: &LineSearchOutcome) {
    assert!(is_feasible(&out.x, g).unwrap().is_feasible());
    for w in out.values.windows(2) {
        assert!(w[1] >= w[0]);
    }
    assert_eq!(*out.values.last().unwrap(), ctx.value(&out.x));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pgd_iterates_feasible_and_monotone(seed in any::<u64>()) {
        let (g, ctx, x) = surrogate_instance(seed);
        let out = pgd(&x, &ctx, &g, &LineSearchConfig::default(), 40).unwrap();
        check_run(&g, &ctx, &out);
    }

    #[test]
    fn newton_iterates_feasible_and_monotone(seed in any::<u64>()) {
        let (g, ctx, x) = surrogate_instance(seed);
        let out = projected_newton(&x, &ctx, &g, &LineSearchConfig::default(), 40).unwrap();
        check_run(&g, &ctx, &out);
    }

    #[test]
    fn common_anchor_gives_common_start_value(seed in any::<u64>()) {
        let (g, ctx, x) = surrogate_instance(seed);
        let a = pgd(&x, &ctx, &g, &LineSearchConfig::default(), 3).unwrap();
        let b = projected_newton(&x, &ctx, &g, &LineSearchConfig::default(), 3).unwrap();
        let c = ptrso(&x, &ctx, &g, &TrustRegionConfig::for_geometry(1.0, &g)).unwrap();
        prop_assert_eq!(a.values[0], b.values[0]);
        prop_assert_eq!(a.values[0], c.state.values[0]);
    }
}
