use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gfra::harness::{
    emit_results, parse_config, run_experiment, sweep_lambda, write_trial_dump, Experiment, ExperimentConfig,
    ExperimentOutput, MethodOutcome,
};
use gfra::simulator::TrialRealization;
use gfra::sysmodel::SystemConfig;
use gfra::{jsonfmt, Error, Point, Result};

/// Grant-free random access with correlated activity: simulation and
/// detection experiments.
#[derive(Parser)]
#[command(name = "gfra", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Number of Monte Carlo trials.
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Reduced scenario (324 users, 6 pilots, 6 intervals, 50 trials).
    #[arg(long, global = true)]
    quick: bool,
    /// Also write one JSON record per trial under DIR/trials.
    #[arg(long, global = true)]
    dump_trials: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the user grid, base stations, path losses and neighbor sets.
    Topology,
    /// Draw trial realizations and write them as replayable dumps.
    Simulate,
    /// Run every configured method on a trial dump.
    Detect {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
    },
    /// Run the campaign and write the ROC table (and the RMSD table).
    Roc,
    /// Run the campaign and write the RMSD table (and the ROC table).
    Rmsd,
    /// Evaluate every regularized method over the lambda grid.
    SweepLambda,
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if c.quick {
        let quick = ExperimentConfig::quick();
        cfg.system = quick.system;
        cfg.n_trials = quick.n_trials;
    }
    if let Some(seed) = c.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = c.trials {
        cfg.n_trials = n;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct TopologyReport<'a> {
    config: &'a SystemConfig,
    user_positions: &'a [Point],
    bs_positions: &'a [Point],
    beta: &'a [f64],
    powers: &'a [f64],
    gamma: f64,
    received_snr_db: Vec<f64>,
    neighbor_sets: Vec<Vec<usize>>,
}

fn topology(cfg: &ExperimentConfig) -> Result<()> {
    let exp = Experiment::new(cfg)?;
    let sys = &exp.system;
    let report = TopologyReport {
        config: &sys.config,
        user_positions: &sys.topology.user_positions,
        bs_positions: &sys.topology.bs_positions,
        beta: &sys.fading.beta,
        powers: &sys.fading.powers,
        gamma: sys.fading.gamma,
        received_snr_db: sys
            .fading
            .received_snr(sys.config.noise_power)
            .iter()
            .map(|s| 10.0 * s.log10())
            .collect(),
        neighbor_sets: sys.topology.neighbor_sets(sys.config.neighbor_radius),
    };
    let path = create_out(&cfg.output_dir)?.join("topology.json");
    jsonfmt::write_file(&path, &report)?;
    println!(
        "{} users, {} measurements, wrote {}",
        sys.config.num_users,
        sys.matrix.nrows(),
        path.display()
    );
    Ok(())
}

fn create_out(dir: &Path) -> Result<&Path> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

fn simulate(cfg: &ExperimentConfig) -> Result<()> {
    let exp = Experiment::new(cfg)?;
    let sys = &exp.system;
    let dir = cfg.output_dir.join("trials");
    create_out(&dir)?;
    for i in 0..cfg.n_trials as u64 {
        let seed = gfra::rng::trial_seed(cfg.master_seed, i);
        let realization = gfra::simulator::simulate_trial(sys, seed, cfg.antennas_mode)?;
        let path = dir.join(format!("trial_{i:05}.json"));
        jsonfmt::write_file(&path, &realization)?;
    }
    println!("wrote {} trial dumps to {}", cfg.n_trials, dir.display());
    Ok(())
}

#[derive(Serialize)]
struct DetectReport<'a> {
    seed: u64,
    methods: &'a [MethodOutcome],
}

fn detect(cfg: &ExperimentConfig, input: &Path) -> Result<()> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let realization: TrialRealization = serde_json::from_str(&text)?;
    let exp = Experiment::new(cfg)?;
    let methods = exp.evaluate(&realization)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("trial");
    let path = create_out(&cfg.output_dir)?.join(format!("detect_{stem}.json"));
    jsonfmt::write_file(
        &path,
        &DetectReport {
            seed: realization.seed,
            methods: &methods,
        },
    )?;
    for m in &methods {
        let active = m.alpha_hat.iter().filter(|&&a| a > 0.5).count();
        println!(
            "{:<7} lambda={:<6} {} users above 0.5, converged={}",
            m.method, m.lambda, active, m.converged
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn campaign(cfg: &ExperimentConfig, dump: bool, sweep: bool) -> Result<ExperimentOutput> {
    let out = if sweep {
        sweep_lambda(cfg)?
    } else {
        run_experiment(cfg)?
    };
    emit_results(&out.tables, &out.manifest, &cfg.output_dir)?;
    if dump {
        for t in &out.trials {
            write_trial_dump(t, &cfg.output_dir)?;
        }
    }
    for (key, n) in &out.manifest.nonconverged {
        eprintln!("warning: {key} hit the iteration cap in {n} trials");
    }
    println!(
        "{} trials, {} method instances, wrote {}",
        cfg.n_trials,
        out.manifest.methods.len(),
        cfg.output_dir.display()
    );
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    for w in cfg.validate()? {
        eprintln!("warning: {w}");
    }
    match cli.command {
        Command::Topology => topology(&cfg),
        Command::Simulate => simulate(&cfg),
        Command::Detect { input } => detect(&cfg, &input),
        Command::Roc | Command::Rmsd => campaign(&cfg, cli.common.dump_trials, false).map(|_| ()),
        Command::SweepLambda => campaign(&cfg, cli.common.dump_trials, true).map(|_| ()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
