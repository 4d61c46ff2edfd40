use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sgstokes::experiment::{
    comparison, render_comparison, run_sweep, write_moments, write_outputs, ExperimentConfig, ExperimentRow,
    SweepParam,
};

#[derive(Parser)]
#[command(name = "sgstokes", version, about = "Stochastic Galerkin Stokes solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment (a single point or the sweep in the file).
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Use the finest production mesh (h = 0.01) instead of the configured level.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one parameter over a list of values.
    Sweep {
        /// mesh_level, M, k, sigma_mu, a_over_astar or kappa.
        #[arg(long)]
        param: String,
        /// Comma separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Base configuration; defaults are used without one.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    let rows = run_sweep(cfg)?;
    write_outputs(&rows, &cfg.output).with_context(|| format!("writing {}", cfg.output.display()))?;
    if cfg.sweep.is_none() {
        write_moments(cfg, &cfg.output)?;
    }
    Ok(rows)
}

fn summarize(rows: &[ExperimentRow]) {
    for r in rows {
        let status = match (&r.error, r.converged) {
            (Some(e), _) => format!("error: {e}"),
            (None, true) => "converged".to_string(),
            (None, false) => "not converged".to_string(),
        };
        println!(
            "{}={} {:>6}: {:>4} iterations, residual {:.2e}, {}",
            r.param,
            r.value,
            r.solver.name(),
            r.iterations,
            r.rel_residual,
            status
        );
    }
    let cmp = comparison(rows);
    if cmp.iter().any(|c| c.minres.is_some() && c.bpcg.is_some()) {
        print!("{}", render_comparison(&cmp));
    }
}

fn main() -> Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (mut cfg, out) = match cli.command {
        Command::Run { config, full, common } => {
            let mut cfg = load(Some(&config))?;
            if full {
                cfg.problem.level = ExperimentConfig::level_for_h(0.01);
                log::info!("full resolution: level {} (h = {})", cfg.problem.level, cfg.problem.h());
            }
            (cfg, common.out)
        }
        Command::Sweep {
            param,
            values,
            config,
            common,
        } => {
            let mut cfg = load(config.as_deref())?;
            if values.is_empty() {
                bail!("no sweep values given");
            }
            cfg.sweep = Some((SweepParam::parse(&param)?, values));
            (cfg, common.out)
        }
    };
    if let Some(out) = out {
        cfg.output = out;
    }
    cfg.validate()?;
    let rows = execute(&cfg)?;
    summarize(&rows);
    println!("reports written to {}", cfg.output.display());
    Ok(if rows.iter().all(|r| r.converged) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
