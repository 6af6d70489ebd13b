use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use log::error;
use rayon::prelude::*;

use qcgeom::curvature::Group;
use qcgeom_cli::{run, Command, JobConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GroupArg {
    U,
    Su,
}

#[derive(Debug, Parser)]
#[command(
    name = "qcgeom",
    version,
    about = "Geodesics, conjugate points, curvature and extensions for penalty metrics on U(2^n)"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Job config (JSON); may be repeated. Without one the built-in default job runs.
    #[arg(short, long = "config", value_name = "FILE")]
    configs: Vec<PathBuf>,
    /// Output directory; each job writes into a subdirectory named after it.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed of every config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of configs run concurrently.
    #[arg(short, long, default_value_t = 1)]
    jobs: usize,
    /// Overrides the group used for curvature averages.
    #[arg(long, value_enum)]
    group: Option<GroupArg>,
}

fn configs(cli: &Cli) -> Result<Vec<JobConfig>> {
    let mut out = if cli.configs.is_empty() {
        vec![JobConfig::default_for(cli.command)]
    } else {
        cli.configs.iter().map(|p| JobConfig::load(p)).collect::<Result<Vec<_>>>()?
    };
    for cfg in &mut out {
        cfg.check_command(cli.command)?;
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(g) = cli.group {
            cfg.group = match g {
                GroupArg::U => Group::U,
                GroupArg::Su => Group::Su,
            };
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match try_main(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(2)
        }
    }
}

fn try_main(cli: &Cli) -> Result<bool> {
    let cfgs = configs(cli)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build().context("building thread pool")?;
    let results: Vec<_> = pool.install(|| cfgs.par_iter().map(|c| run(c, &cli.out)).collect());
    let mut ok = true;
    for (cfg, res) in cfgs.iter().zip(results) {
        let name = cfg.name.as_deref().unwrap_or("?");
        match res {
            Ok(o) if o.failures.is_empty() => println!("{name}: ok ({})", o.dir.display()),
            Ok(o) => {
                ok = false;
                for f in &o.failures {
                    println!("{name}: FAILED {f}");
                }
            }
            Err(e) => {
                ok = false;
                println!("{name}: ERROR {e:#}");
            }
        }
    }
    Ok(ok)
}
