//! `cvsheet`: batch front end for stability checks, DtN spectra, symbol tables,
//! frozen-coefficient evolution, energy introspection and the verification suite.

mod cmd;
mod config;
mod report;
mod samples;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use report::Report;

#[derive(Parser)]
#[command(name = "cvsheet", version, about = "Current-vortex sheet analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports and tables.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized checks (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (overrides the config; 0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Stability margins, symmetrizer, hyperbolicity and ellipticity of an interface trace.
    CheckStability {
        /// Trace CSV, or a bundled sample name (`stable_3d`, `kelvin_helmholtz`).
        trace: Option<PathBuf>,
    },
    /// Friedrichs symmetrizer `mu` of an interface trace.
    ComputeMu {
        trace: Option<PathBuf>,
    },
    /// Dirichlet-to-Neumann spectra, flat oracle and symmetry.
    Dtn,
    /// Symbol symmetrization residuals and symbol tables.
    Symbols,
    /// Frozen-coefficient evolution against the normal-mode oracle.
    Evolve,
    /// Layered energies, weight patterns and positivity of the interface energy.
    Energies,
    /// Full invariant suite.
    Verify,
    /// Write the bundled sample traces.
    Samples {
        #[arg(long, default_value = "samples")]
        dir: PathBuf,
    },
}

fn trace_arg(arg: Option<&Path>, cfg: &RunConfig, base: Option<&Path>) -> Option<PathBuf> {
    arg.map(Path::to_path_buf).or_else(|| {
        cfg.stability.trace.as_ref().map(|p| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.clone(),
        })
    })
}

fn run(cli: Cli) -> Result<bool> {
    let (mut cfg, base) = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    cfg.validate()?;
    if cfg.jobs > 0 {
        // a second build only fails when a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global();
    }
    if let Command::Samples { dir } = &cli.command {
        for p in samples::write_all(dir)? {
            println!("wrote {}", p.display());
        }
        return Ok(true);
    }
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let out = cli.out.as_path();
    let base = base.as_deref();
    let rep: Report = match &cli.command {
        Command::CheckStability { trace } => {
            let t = samples::load_trace(trace_arg(trace.as_deref(), &cfg, base).as_deref())?;
            cmd::stability::check(&cfg, &t, out)?
        }
        Command::ComputeMu { trace } => {
            let t = samples::load_trace(trace_arg(trace.as_deref(), &cfg, base).as_deref())?;
            cmd::stability::compute_mu(&cfg, &t, out)?
        }
        Command::Dtn => cmd::dtn::run(&cfg, base, out)?,
        Command::Symbols => cmd::symbols::run(&cfg, out)?,
        Command::Evolve => cmd::evolve::run(&cfg, out)?,
        Command::Energies => cmd::energies::run(&cfg, out)?,
        Command::Verify => cmd::verify::run(&cfg, out)?,
        Command::Samples { .. } => unreachable!(),
    };
    rep.finish(out)
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
