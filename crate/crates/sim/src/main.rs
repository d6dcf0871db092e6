use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use antijam_sim::config::parse_roster;
use antijam_sim::output::{manifest_path, sibling, write_file, Manifest, OutputFile};
use antijam_sim::sweep::{csv_bytes, mean, run_sweep, Axis, Row};
use antijam_sim::{beampattern, theory_suite, timescale, run_trial, Algorithm, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "antijam", version, about = "Movable-antenna anti-jamming Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per point (overrides the config).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file; a `.manifest.json` is written beside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated roster, e.g. `ula,ptrso,pgd,pnm,ptrso-hist`.
    #[arg(long, global = true)]
    algos: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Record optimizer wall time in `runtime_ms` (output is then not reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Output SINR and effectiveness versus SNR.
    SweepSnr,
    /// Output SINR versus number of antennas at fixed aperture.
    SweepNr,
    /// Output SINR versus snapshots per block.
    SweepT,
    /// Output SINR versus number of jammers.
    SweepI,
    /// Chain several blocks and score every visited anchor.
    TwoTimescale {
        /// Blocks per run (default: `two_timescale.blocks` of the config).
        #[arg(long)]
        blocks: Option<usize>,
    },
    /// Averaged beampatterns on the fixed demo scenario.
    Beampattern,
    /// Numerical verification of the bound checks; exits nonzero on a violated bound.
    Theory,
    /// Run and print a single trial.
    Trial {
        /// Trial index under the master seed.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SweepSnr => "sweep-snr",
            Command::SweepNr => "sweep-nr",
            Command::SweepT => "sweep-t",
            Command::SweepI => "sweep-i",
            Command::TwoTimescale { .. } => "two-timescale",
            Command::Beampattern => "beampattern",
            Command::Theory => "theory",
            Command::Trial { .. } => "trial",
        }
    }
}

fn load_config(c: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    if let Some(a) = &c.algos {
        cfg.algorithms = parse_roster(a)?;
    }
    cfg.timing |= c.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(rows: &[Row]) {
    let mut keys: Vec<(f64, Algorithm)> = rows.iter().map(|r| (r.value, r.algo)).collect();
    keys.dedup();
    eprintln!("{:>8} {:>11} {:>10} {:>10} {:>8}", "value", "algo", "true_dB", "surr_dB", "eff");
    for (v, a) in keys {
        let sel: Vec<&Row> = rows.iter().filter(|r| r.value == v && r.algo == a).collect();
        let t: Vec<f64> = sel.iter().map(|r| r.true_sinr_db).collect();
        let s: Vec<f64> = sel.iter().map(|r| r.surrogate_sinr_db).collect();
        let eff = sel.iter().filter(|r| r.effective).count() as f64 / sel.len() as f64;
        eprintln!("{v:>8} {:>11} {:>10.3} {:>10.3} {:>7.1}%", a.name(), mean(&t), mean(&s), 100.0 * eff);
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let cfg = load_config(&cli.common)?;
    let cmd = cli.command.name();
    let default_ext = if matches!(cli.command, Command::Theory) { "json" } else { "csv" };
    let out = cli
        .common
        .out
        .clone()
        .unwrap_or_else(|| Path::new("results").join(format!("{cmd}.{default_ext}")));
    let start = Instant::now();
    let mut outputs: Vec<OutputFile> = Vec::new();
    let mut code = ExitCode::SUCCESS;

    match cli.command {
        Command::SweepSnr | Command::SweepNr | Command::SweepT | Command::SweepI => {
            let axis = match cli.command {
                Command::SweepSnr => Axis::Snr,
                Command::SweepNr => Axis::Antennas,
                Command::SweepT => Axis::Snapshots,
                _ => Axis::Jammers,
            };
            let result = run_sweep(&cfg, axis, &axis.values(&cfg))?;
            let rows = result.rows();
            print_summary(&rows);
            outputs.push(write_file(&out, &csv_bytes(&rows)?)?);
            outputs.push(write_file(&sibling(&out, "summary"), &csv_bytes(&result.summaries())?)?);
        }
        Command::TwoTimescale { blocks } => {
            let b = blocks.unwrap_or(cfg.two_timescale.blocks);
            let runs = timescale::run_two_timescale(&cfg, b)?;
            let rows = timescale::rows(&runs);
            print_summary(&rows);
            for &a in &cfg.algorithms {
                let mono = runs
                    .iter()
                    .filter(|r| r.get(a).is_some_and(|t| t.is_nondecreasing()))
                    .count();
                eprintln!("{a}: true SINR nondecreasing over blocks in {mono}/{} runs", runs.len());
            }
            outputs.push(write_file(&out, &csv_bytes(&rows)?)?);
        }
        Command::Beampattern => {
            let bp = beampattern::run_beampattern_demo(&cfg)?;
            for (a, _) in &bp.patterns {
                let depths = bp.null_depths(*a).unwrap_or_default();
                let shown: Vec<String> = depths.iter().map(|d| format!("{d:.1}")).collect();
                eprintln!("{a}: pattern at jammer angles [{}] dB", shown.join(", "));
            }
            outputs.push(write_file(&out, &csv_bytes(&bp.rows())?)?);
        }
        Command::Theory => {
            let report = theory_suite::run_theory_suite(&cfg)?;
            for c in &report.checks {
                eprintln!(
                    "{:<28} {:<4} {:>6} samples {:>5} failures  {}={:.4e}  {}",
                    c.name,
                    if c.hard { "hard" } else { "soft" },
                    c.samples,
                    c.failures,
                    c.metric_name,
                    c.metric,
                    if c.passed { "PASS" } else { "FAIL" }
                );
            }
            outputs.push(write_file(&out, serde_json::to_string_pretty(&report)?.as_bytes())?);
            if !report.hard_bounds_hold() {
                code = ExitCode::from(2);
            }
        }
        Command::Trial { index } => {
            let rec = run_trial(&cfg, index)?;
            let rows: Vec<Row> = rec
                .records
                .iter()
                .map(|r| Row {
                    axis: "trial",
                    value: index as f64,
                    seed: rec.seed,
                    algo: r.algo,
                    true_sinr_db: r.true_sinr_db,
                    surrogate_sinr_db: r.surrogate_sinr_db,
                    effective: r.effective,
                    iters: r.iters,
                    runtime_ms: r.runtime_ms,
                })
                .collect();
            print_summary(&rows);
            outputs.push(write_file(&out, &csv_bytes(&rows)?)?);
        }
    }

    Manifest::new(cmd, &cfg, outputs, start.elapsed()).write(&manifest_path(&out))?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.common.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::FAILURE;
        }
        Some(j) => rayon::ThreadPoolBuilder::new().num_threads(j).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
