use std::f64::consts::PI;

use antijam_core::geometry::{random_feasible, ula, GeometryConfig};
use antijam_core::linalg::C64;
use antijam_core::model::*;
use antijam_core::objective::true_value;
use antijam_core::stats::{loglog_slope, spearman};
use antijam_core::theory::*;
use antijam_oracles as oracle;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn steering_lipschitz_holds_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let check = check_steering_lipschitz(10_000, &mut rng);
    assert_eq!(check.trials, 10_000);
    assert_eq!(check.violations, 0, "max slack {}", check.max_slack);
}

#[test]
fn covariance_lipschitz_holds_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let s = oracle::random_scenario(&mut rng, 8, 8, 0.0, 10.0);
        let check = check_covariance_lipschitz(&s, 8, 8.0, 1000, &mut rng);
        assert_eq!(check.violations, 0, "max slack {}", check.max_slack);
    }
}

#[test]
fn covariance_lipschitz_closed_form_oracle() {
    // Single broadside-free jammer, no signal: closed-form plug-in instance.
    let j = JammerSet::new(vec![PI / 2.0], vec![C64::new(1.0, 0.0)], vec![1.0]).unwrap();
    let s = ScenarioConfig::new(1.0, 0.0, 1.0, DesiredPaths::single(0.2), j).unwrap();
    assert!((lipschitz_constant(&s, 4) - 8.0 * PI).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = oracle::random_scenario(&mut rng, 3, 2, 5.0, 10.0);
    let k = s.wavenumber();
    let n = 6.0f64;
    let p = s.paths();
    let a2: f64 = p.gains().iter().map(|g| g.norm_sqr()).sum();
    let sin2: f64 = p.angles().iter().map(|t| t.sin().powi(2)).sum();
    let mut want = s.sigma_s2() * 3f64.sqrt() * a2 * sin2.sqrt();
    for i in 0..2 {
        let jm = s.jammers();
        want += jm.powers()[i] * jm.gains()[i].norm_sqr() * jm.angles()[i].sin().abs();
    }
    want *= 2.0 * k * n.sqrt();
    assert!((lipschitz_constant(&s, 6) - want).abs() <= 1e-12 * want);
}

#[test]
fn inverse_perturbation_lemmas_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (lower, upper) = check_inverse_perturbation(4, 10_000, &mut rng).unwrap();
    assert_eq!(lower.trials, 10_000);
    assert_eq!(lower.violations, 0, "lower max slack {}", lower.max_slack);
    assert_eq!(upper.violations, 0, "upper max slack {}", upper.max_slack);
}

#[test]
fn concentration_scales_like_inverse_root_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = oracle::random_scenario(&mut rng, 8, 8, 0.0, 10.0);
    let x = ula(&GeometryConfig::new(8, 0.5, 8.0).unwrap());
    let curve = concentration_curve(&s, &x, &[25, 100, 400, 1600], 200, SymbolLaw::Gaussian, &mut rng).unwrap();
    for w in curve.windows(2) {
        assert!(w[1].1 < w[0].1, "{curve:?}");
        let ratio = w[1].1 / w[0].1;
        assert!((0.35..=0.65).contains(&ratio), "ratio {ratio}");
    }
    let pts: Vec<(f64, f64)> = curve.iter().map(|&(t, e)| (t as f64, e)).collect();
    let slope = loglog_slope(&pts);
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
}

#[test]
fn noise_only_concentration_at_large_t() {
    let s = ScenarioConfig::new(1.0, 0.0, 1.0, DesiredPaths::single(0.3), JammerSet::none()).unwrap();
    let x = ula(&GeometryConfig::new(8, 0.5, 8.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t = 100_000;
    let curve = concentration_curve(&s, &x, &[t], 5, SymbolLaw::Gaussian, &mut rng).unwrap();
    let scale = s.sigma_n2() * (8.0 / t as f64).sqrt();
    // White-noise sample covariance deviates by about 2σ_n²√(N_r/T).
    assert!(curve[0].1 < 3.0 * scale, "error {} vs scale {}", curve[0].1, scale);
    assert!(curve[0].1 > scale, "error {} vs scale {}", curve[0].1, scale);
}

#[test]
fn surrogate_gap_grows_with_displacement() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = oracle::random_scenario(&mut rng, 8, 8, 0.0, 10.0);
    let x = ula(&GeometryConfig::new(8, 0.5, 8.0).unwrap());
    let t_grid = [0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8];
    let gap = surrogate_gap_profile(&s, &x, 8, &t_grid, 400, 40, &mut rng).unwrap();
    let rho = spearman(&t_grid, &gap);
    assert!(rho > 0.9, "spearman {rho}: {gap:?}");
}

#[test]
fn surrogate_gap_at_anchor_vanishes_with_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = oracle::random_scenario(&mut rng, 8, 8, 0.0, 10.0);
    let x = ula(&GeometryConfig::new(8, 0.5, 8.0).unwrap());
    let g = true_value(&x, &s).unwrap();
    let big = surrogate_gap_profile(&s, &x, 1, &[0.0], 100_000, 2, &mut rng).unwrap()[0];
    assert!(big < 0.01 * g, "gap {big} vs g {g}");

    let mut shrink = 0;
    for t in [50, 100, 200, 400] {
        let a = surrogate_gap_profile(&s, &x, 1, &[0.0], t, 200, &mut rng).unwrap()[0];
        let b = surrogate_gap_profile(&s, &x, 1, &[0.0], 2 * t, 200, &mut rng).unwrap()[0];
        if b < a {
            shrink += 1;
        }
    }
    assert_eq!(shrink, 4);
}

#[test]
fn gap_envelope_is_affine_in_displacement() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = oracle::random_scenario(&mut rng, 4, 2, 0.0, 10.0);
    let b = TheoryBounds::new(&s, 8, vec![]);
    assert_eq!(b.lipschitz, lipschitz_constant(&s, 8));
    assert_eq!(b.gap_constant, gap_constant(&s));
    let e0 = b.gap_envelope(0.0, 0.3);
    assert!((e0 - b.gap_constant * 0.3).abs() <= 1e-12 * e0);
    let e1 = b.gap_envelope(0.5, 0.3);
    assert!((e1 - e0 - b.gap_constant * b.lipschitz * 0.5).abs() <= 1e-9 * e1);
}

fn bias_instances(which: BiasCovariances, seed: u64, instances: usize) -> (usize, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = GeometryConfig::new(8, 0.5, 8.0).unwrap();
    let (mut passed, mut checked, mut bounds) = (0, 0, 0);
    for _ in 0..instances {
        let s = oracle::random_scenario(&mut rng, 8, 8, 0.0, 10.0);
        let x_star = random_feasible(&g, &mut rng);
        let anchors = vec![random_feasible(&g, &mut rng), random_feasible(&g, &mut rng), x_star.clone()];
        let check = geometric_bias_check(&x_star, &anchors, &s, 4, which, &mut rng).unwrap();
        if let BiasVerdict::Checked {
            spectral_bounds_hold,
            ..
        } = check.verdict
        {
            checked += 1;
            passed += check.verdict.all_passed() as usize;
            bounds += spectral_bounds_hold as usize;
        }
    }
    (checked, passed, bounds)
}

#[test]
fn historical_average_bias_with_true_covariances() {
    let (checked, passed, _) = bias_instances(BiasCovariances::True, 10, 500);
    assert_eq!(checked, 500);
    assert_eq!(passed, checked);
}

#[test]
fn historical_average_bias_with_sampled_covariances() {
    let (checked, passed, _) = bias_instances(BiasCovariances::Sampled(1000), 11, 500);
    assert_eq!(checked, 500);
    assert!(passed as f64 >= 0.95 * checked as f64, "{passed}/{checked}");
}
