//! `rydwalk`: command-line front end for the rydberg-walk crate.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures, 1 for I/O errors. Nothing is written unless the command
//! succeeds.

mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;
use rydberg_walk::par::Exec;

use args::{Cli, Command};
use commands::Output;
use error::{config_err, CliResult};
use output::{sha256_hex, Artifact, FileEntry, RunManifest, MANIFEST};

/// Run `f` with the requested number of workers.
#[cfg(feature = "parallel")]
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce(Exec) -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(f(Exec::Parallel)),
        Some(0) => Err(config_err("--workers must be at least 1")),
        Some(1) => Ok(f(Exec::Sequential)),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| config_err(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(|| f(Exec::Parallel)))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce(Exec) -> T + Send) -> CliResult<T> {
    match workers {
        Some(0) => Err(config_err("--workers must be at least 1")),
        Some(n) if n > 1 => {
            log::warn!("built without the parallel feature; running sequentially");
            Ok(f(Exec::Sequential))
        }
        _ => Ok(f(Exec::Sequential)),
    }
}

fn finish(cli: &Cli, out: Output) -> CliResult<()> {
    let resolved = serde_json::to_vec(&out.resolved)?;
    let config_hash = sha256_hex(&resolved);
    let mut artifacts = out.artifacts;
    artifacts.push(Artifact::json("config.json", &out.resolved)?);
    let files = artifacts
        .iter()
        .map(|a| FileEntry {
            name: a.name.clone(),
            bytes: a.bytes.len(),
            sha256: sha256_hex(&a.bytes),
            config_hash: config_hash.clone(),
        })
        .collect();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: out.command,
        config_path: out.config_path,
        config_hash,
        output_dir: cli.out.clone(),
        stages: out.stages,
        files,
    };
    artifacts.push(Artifact::json(MANIFEST, &manifest)?);
    output::commit(&cli.out, &artifacts)?;
    log::info!("wrote {} files to {}", artifacts.len(), cli.out.display());
    Ok(())
}

fn execute(cli: &Cli) -> CliResult<()> {
    output::check_target(&cli.out)?;
    let out = match &cli.command {
        Command::Run(src) => with_workers(cli.workers, |exec| commands::run(src, exec))?,
        Command::Bands(a) => commands::bands(a),
        Command::PhaseDiagram(a) => with_workers(cli.workers, |exec| commands::phase(a, exec))?,
        Command::ErrorBudget(a) => commands::budget(a),
        Command::Fidelity(a) => commands::fidelity(a),
        Command::Micro { command } => with_workers(cli.workers, |exec| commands::micro(command, exec))?,
        Command::LatticeDump(src) => commands::lattice_dump(src),
    }?;
    finish(cli, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rydwalk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
