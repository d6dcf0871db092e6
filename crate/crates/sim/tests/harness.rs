use antijam_sim::beampattern::{angle_grid, run_beampattern_demo};
use antijam_sim::config::{parse_roster, Algorithm, ExperimentConfig};
use antijam_sim::sweep::{csv_bytes, run_sweep, Axis, Direction};
use antijam_sim::theory_suite::run_theory_suite;
use antijam_sim::timescale::run_two_timescale;
use antijam_sim::trial::{simulate, surrogate_sinr, trial_seed, SURROGATE_SINR_CAP};
use antijam_sim::run_trial;
use antijam_oracles as oracle;

fn small(trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        trials,
        ..ExperimentConfig::default()
    }
}

/// True SINR of the final ULA position recomputed with dense linear algebra:
/// MVDR weights from the evaluation block's outer-product average, scored
/// against the exact interference-plus-noise covariance.
#[test]
fn ula_record_matches_dense_recomputation() {
    let mut cfg = small(1);
    cfg.algorithms = vec![Algorithm::Ula];
    for index in 0..10 {
        let rec = run_trial(&cfg, index).unwrap();
        assert_eq!(rec.records.len(), 1);
        let r = rec.get(Algorithm::Ula).unwrap();
        assert!(!r.effective);
        assert_eq!(r.iters, 0);

        let run = simulate(&cfg, trial_seed(cfg.seed, index), &[Algorithm::Ula]).unwrap();
        let s = &run.scenario;
        let x = run.leg(Algorithm::Ula).unwrap().final_anchor().clone();
        let data = run.evaluation.received(&x, s).unwrap();
        let rhat = oracle::outer_product_average(&data);
        let h0 = oracle::direct_channel(&x, s.paths().angles(), s.paths().gains(), s.wavelength());
        let u = oracle::dense_inverse(&rhat) * &h0;
        let w = &u / h0.dotc(&u);
        let rin = oracle::rank_one_covariance(&x, s, false);
        let sinr = s.sigma_s2() * w.dotc(&h0).norm_sqr() / w.dotc(&(rin * &w)).re;
        assert!((r.true_sinr_db - 10.0 * sinr.log10()).abs() < 1e-8, "{} vs {sinr}", r.true_sinr_db);
    }
}

#[test]
fn legs_share_random_numbers_across_rosters() {
    let mut cfg = small(1);
    let full = run_trial(&cfg, 3).unwrap();
    cfg.algorithms = vec![Algorithm::Ptrso];
    let alone = run_trial(&cfg, 3).unwrap();
    assert_eq!(alone.records.len(), 1);
    assert_eq!(alone.get(Algorithm::Ptrso), full.get(Algorithm::Ptrso));
    for r in &full.records {
        let ula = full.get(Algorithm::Ula).unwrap();
        assert_eq!(r.effective, r.algo != Algorithm::Ula && r.true_sinr_db > ula.true_sinr_db);
    }
}

#[test]
fn surrogate_sinr_inverts_the_objective_and_saturates() {
    // ĝ = SINR/(σ_s²(1 + SINR)) for the true covariance.
    for sinr in [1e-3, 0.5, 1.0, 40.0, 1e4] {
        let s2 = 2.0;
        let ghat = sinr / (s2 * (1.0 + sinr));
        assert!((surrogate_sinr(s2, ghat) - sinr).abs() <= 1e-9 * sinr);
    }
    assert_eq!(surrogate_sinr(1.0, 1.0), SURROGATE_SINR_CAP);
    assert_eq!(surrogate_sinr(1.0, 7.0), SURROGATE_SINR_CAP);
}

#[test]
fn sweep_csv_schema_order_and_reproducibility() {
    let mut cfg = small(4);
    cfg.algorithms = parse_roster("pnm,ula,ptrso").unwrap();
    let run = || run_sweep(&cfg, Axis::Snapshots, &[25.0, 100.0]).unwrap();
    let a = run();
    let bytes = csv_bytes(&a.rows()).unwrap();
    assert_eq!(bytes, csv_bytes(&run().rows()).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis,value,seed,algo,true_sinr_db,surrogate_sinr_db,effective,iters,runtime_ms"
    );
    let body: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(body.len(), 2 * 3 * 4);
    assert!(body.iter().all(|r| r[0] == "t" && r[8] == "0.0"));
    assert_eq!(body[0][3], "ula");
    assert_eq!(body[4][3], "ptrso");
    assert_eq!(body[8][3], "pnm");
    assert_eq!(body[12][1], "100.0");
    // Paired seeds: trial i has the same seed at every value.
    for i in 0..12 {
        assert_eq!(body[i][2], body[i + 12][2]);
    }
    let sums = a.summaries();
    assert_eq!(sums.len(), 6);
    for s in &sums {
        assert!(s.ci_low_db <= s.mean_true_sinr_db && s.mean_true_sinr_db <= s.ci_high_db);
    }
    assert_eq!(a.trend(Algorithm::Ptrso, Direction::Nondecreasing).len(), 1);
}

#[test]
fn one_block_timescale_run_matches_single_trial() {
    let mut cfg = small(3);
    cfg.algorithms = vec![Algorithm::Ula, Algorithm::Ptrso, Algorithm::PtrsoHist];
    let runs = run_two_timescale(&cfg, 1).unwrap();
    for run in &runs {
        let rec = run_trial(&cfg, run.index).unwrap();
        let local = run.get(Algorithm::Ptrso).unwrap();
        assert_eq!(local.points.len(), 2);
        assert_eq!(local.last().true_sinr_db, rec.get(Algorithm::Ptrso).unwrap().true_sinr_db);
        // The one-block history is the current block alone.
        assert_eq!(run.get(Algorithm::PtrsoHist).unwrap(), &antijam_sim::timescale::Trajectory {
            algo: Algorithm::PtrsoHist,
            points: local.points.clone(),
        });
        assert_eq!(run.ula_sinr_db, rec.get(Algorithm::Ula).unwrap().true_sinr_db);
    }
}

/// Regression baseline at the default scenario over 200 runs of five blocks:
/// mean true SINR rises from the ULA start (about −7 dB) by about 3 dB, and
/// 21 runs (10.5%) have a nondecreasing per-block trajectory.
#[test]
fn multi_block_runs_improve_on_average() {
    let mut cfg = small(200);
    cfg.algorithms = vec![Algorithm::Ula, Algorithm::Ptrso];
    let runs = run_two_timescale(&cfg, 5).unwrap();
    let mean_at = |b: usize| {
        runs.iter().map(|r| r.get(Algorithm::Ptrso).unwrap().points[b].true_sinr_db).sum::<f64>() / runs.len() as f64
    };
    assert!(mean_at(5) > mean_at(0) + 2.0, "{} -> {}", mean_at(0), mean_at(5));
    let mono = runs.iter().filter(|r| r.get(Algorithm::Ptrso).unwrap().is_nondecreasing()).count();
    assert!(mono >= 15, "{mono}/200 nondecreasing");
    for r in &runs {
        let t = r.get(Algorithm::Ptrso).unwrap();
        assert_eq!(t.points[0].true_sinr_db, r.ula_sinr_db);
        assert_eq!(t.points[0].iters, 0);
    }
}

#[test]
fn beampattern_demo_nulls_jammers() {
    let mut cfg = ExperimentConfig::default();
    cfg.beampattern.trials = 20;
    cfg.algorithms = vec![Algorithm::Ula, Algorithm::Ptrso];
    let bp = run_beampattern_demo(&cfg).unwrap();
    assert_eq!(bp.grid_deg, angle_grid(361));
    assert_eq!(bp.rows().len(), 361 * 2);
    for (algo, p) in &bp.patterns {
        let peak = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(peak.abs() < 1e-12);
        let desired = cfg
            .beampattern
            .path_angles_deg
            .iter()
            .map(|&t| p[bp.grid_deg.iter().position(|&g| (g - t).abs() < 1e-9).unwrap()])
            .fold(f64::NEG_INFINITY, f64::max);
        for d in bp.null_depths(*algo).unwrap() {
            assert!(d < -15.0 && d < desired, "{algo}: {d} dB vs {desired} dB");
        }
    }
}

#[test]
fn theory_suite_hard_bounds_hold_at_reduced_size() {
    let mut cfg = ExperimentConfig::default();
    let th = &mut cfg.theory;
    th.steering_draws = 500;
    th.covariance_scenarios = 2;
    th.covariance_pairs = 100;
    th.perturbation_draws = 500;
    th.concentration_trials = 40;
    th.bias_instances = 40;
    let r = run_theory_suite(&cfg).unwrap();
    assert!(r.hard_bounds_hold(), "{:#?}", r.checks);
    for name in [
        "steering_lipschitz",
        "covariance_lipschitz",
        "inverse_perturbation_lower",
        "inverse_difference_upper",
        "concentration_slope",
        "surrogate_gap_monotone",
        "geometric_bias_true",
        "geometric_bias_sampled",
    ] {
        assert!(r.check(name).is_some(), "{name}");
    }
    assert_eq!(r.concentration.len(), 4);
    assert!(r.concentration.windows(2).all(|w| w[1].1 < w[0].1));
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"geometric_bias_true\""));
}

#[test]
fn cli_trial_writes_csv_and_manifest() {
    let dir = std::env::temp_dir().join(format!("antijam-harness-{}", std::process::id()));
    let out = dir.join("t.csv");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_antijam"))
        .args(["trial", "--index", "2", "--algos", "ula,pgd", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read(&out).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("t.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "trial");
    assert_eq!(manifest["outputs"][0]["sha256_blob"], antijam_sim::output::blob_hash(&csv));
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
    let bad = std::process::Command::new(env!("CARGO_BIN_EXE_antijam"))
        .args(["trial", "--algos", "nope"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    std::fs::remove_dir_all(dir).unwrap();
}
