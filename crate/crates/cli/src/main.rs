use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use wave_fpinn::commands::{self, EvalOptions};
use wave_fpinn::config::RunConfig;
use wave_fpinn::exec::{init_threads_from_env, Execution};
use wave_fpinn::report::num;

/// Fourier-feature PINN solver for the wave equation.
///
/// Worker threads: set WAVE_FPINN_THREADS (defaults to all cores).
#[derive(Parser)]
#[command(name = "wave-fpinn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Built-in problem to use when no configuration file is given.
    #[arg(long)]
    problem: Option<String>,
    /// Override a configuration key, e.g. `--set train.epochs=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Evaluate on a single thread.
    #[arg(long)]
    sequential: bool,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<RunConfig> {
        let cfg = match (&self.config, &self.problem) {
            (Some(path), None) => RunConfig::load(path, &self.overrides)?,
            (None, Some(p)) => {
                let base = RunConfig::for_problem(p).to_toml();
                RunConfig::parse(&base, &self.overrides)?
            }
            (Some(_), Some(_)) => bail!("give either --config or --problem, not both"),
            (None, None) => bail!("a run needs --config FILE or --problem NAME"),
        };
        Ok(cfg)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write its curves, error grid and checkpoint.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on its evaluation set.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Use this configuration instead of the one stored in the checkpoint.
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (defaults to the configuration's).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train all four normalization modes with identical seeds.
    Compare {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Compare analytic network derivatives against finite differences.
    Gradcheck {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Residuals of the exact solutions of the built-in problems.
    Residualcheck {
        /// Problems to check (all built-ins when omitted).
        #[arg(long)]
        problem: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exit with status 7 if any residual exceeds this.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

/// Status for a completed check that did not meet its tolerance.
const CHECK_FAILED: u8 = 7;

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut log = |s: &str| eprintln!("{s}");
    match cli.command {
        Command::Train { cfg, resume } => {
            let run = cfg.load()?;
            let out = commands::train(&run, resume.as_deref(), cfg.exec(), &mut log)?;
            if let Some(r) = out.final_rel {
                println!("final_rel {}", num(r));
            }
        }
        Command::Eval {
            checkpoint,
            config,
            overrides,
            out,
        } => {
            let config = match config {
                Some(p) => Some(RunConfig::load(&p, &overrides)?),
                None if !overrides.is_empty() => bail!("--set needs --config for eval"),
                None => None,
            };
            let opts = EvalOptions {
                config,
                output_dir: out,
            };
            let rel = commands::eval(&checkpoint, &opts, Execution::Parallel)
                .with_context(|| format!("evaluating {}", checkpoint.display()))?;
            println!("rel {}", num(rel));
        }
        Command::Compare { cfg } => {
            let run = cfg.load()?;
            for r in commands::compare(&run, cfg.exec(), &mut log)? {
                let v = r.final_rel.map(num).unwrap_or_else(|| "n/a".into());
                println!("{:<15} {v}", r.mode.name());
            }
        }
        Command::Gradcheck { cfg, points, seed } => {
            let run = cfg.load()?;
            let r = commands::gradcheck_config(&run, points, seed)?;
            println!("points            {}", r.points);
            println!("input gradient    {}", num(r.gradient));
            println!("second derivative {}", num(r.second));
            println!("parameters        {}", num(r.params));
        }
        Command::Residualcheck {
            problem,
            points,
            seed,
            tol,
        } => {
            let reports = commands::residualcheck_all(&problem, points, seed)?;
            println!("{:<20} {:<15} {:>10} {:>10} {:>10} {:>10}", "problem", "mode", "pde", "bc", "ic", "ic_t");
            let mut ok = true;
            for r in &reports {
                println!(
                    "{:<20} {:<15} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}",
                    r.problem,
                    r.mode.name(),
                    r.pde,
                    r.boundary,
                    r.initial_value,
                    r.initial_velocity
                );
                ok &= r.worst() <= tol;
            }
            if !ok {
                eprintln!("some residuals exceed {tol:e}");
                return Ok(ExitCode::from(CHECK_FAILED));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    init_threads_from_env();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<wave_fpinn::Error>()
                .map_or(1, |e| e.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
