use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nlslab::config::parse_config;
use nlslab::evolution::Trace;
use nlslab::ground_state::default_constants;
use nlslab::runner::{
    checks_text, file_header, ground_state_text, output_dir, run_analyses, run_classify,
    run_simulation, sweep, verify, Runner,
};

#[derive(Parser)]
#[command(
    name = "nlslab",
    version,
    about = "Radial log-supercritical NLS simulator and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the initial-data hypotheses.
    Classify(Common),
    /// Evolve, analyze and write all artifacts.
    Simulate(Common),
    /// Analyze an existing trace.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Trace file; defaults to `<out>/trace.txt`.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Virial scale, as `m=<value>`; repeatable.
        #[arg(long, value_parser = parse_virial)]
        virial: Vec<f64>,
        #[arg(long)]
        concentration: bool,
    },
    /// Print the ground-state constants for the config's dimension.
    GroundState(Common),
    /// Run the invariant suite; exits nonzero on any failure.
    Verify(Common),
    /// Run the config over a grid of gamma values and amplitudes.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        gamma: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        amplitude: Vec<f64>,
    },
}

fn parse_virial(s: &str) -> Result<f64, String> {
    let v = s
        .strip_prefix("m=")
        .ok_or_else(|| format!("expected m=<value>, got `{s}`"))?;
    v.parse()
        .map_err(|e| format!("bad virial scale `{v}`: {e}"))
}

fn load(common: &Common) -> Result<(Runner, PathBuf)> {
    let mut cfg = parse_config(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let dir = output_dir(&cfg, common.out.as_deref());
    Ok((Runner::new(cfg)?, dir))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Classify(common) => {
            let (runner, dir) = load(&common)?;
            let (path, _) = run_classify(&runner, &dir)?;
            print!("{}", std::fs::read_to_string(path)?);
        }
        Command::Simulate(common) => {
            let (runner, dir) = load(&common)?;
            let trace = run_simulation(&runner, &dir)?;
            println!(
                "halt={} halt_time={} snapshots={} out={}",
                trace.halt().as_str(),
                trace.header.halt_time,
                trace.snapshots.len(),
                dir.display()
            );
        }
        Command::Analyze {
            common,
            trace,
            virial,
            concentration,
        } => {
            let (runner, dir) = load(&common)?;
            let path = trace.unwrap_or_else(|| dir.join("trace.txt"));
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let trace = Trace::from_text(&text)?;
            if trace.spec() != &runner.cfg.grid_spec()? {
                bail!("trace grid {:?} differs from the config grid", trace.spec());
            }
            let virial = if virial.is_empty() {
                runner.cfg.analysis.virial_m.clone()
            } else {
                virial
            };
            let concentration = concentration || runner.cfg.analysis.concentration;
            for written in run_analyses(&runner, &trace, &dir, &virial, concentration)? {
                print!("{}", std::fs::read_to_string(&written)?);
            }
        }
        Command::GroundState(common) => {
            let (runner, _) = load(&common)?;
            let c = default_constants(runner.cfg.grid.dim)?;
            print!("{}{}", file_header(&runner.cfg), ground_state_text(&c));
        }
        Command::Verify(common) => {
            let (runner, _) = load(&common)?;
            let checks = verify(&runner.cfg)?;
            print!("{}", checks_text(&checks));
            return Ok(checks.iter().all(|c| c.passed));
        }
        Command::Sweep {
            common,
            gamma,
            amplitude,
        } => {
            let (runner, dir) = load(&common)?;
            let rows = sweep(&runner.cfg, &gamma, &amplitude, &dir)?;
            println!(
                "runs={} index={}",
                rows.len(),
                dir.join("index.csv").display()
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
