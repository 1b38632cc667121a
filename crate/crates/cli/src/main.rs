use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fgi_core::manifold::{write_mesh, Manifold};
use fgi_core::scenario::{parse_config, run_scenario, ExitStatus, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(name = "fgi-lab", version, about = "Run optimal transport gradient inequality scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a generated mesh in the text mesh format.
    Mesh {
        #[arg(long, value_enum)]
        kind: MeshKind,
        #[arg(long, default_value_t = 3)]
        subdivisions: u32,
        /// Grid size per axis for the torus.
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshKind {
    Sphere,
    Torus,
}

fn exit(status: ExitStatus) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn load(path: &Path) -> Result<ScenarioConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        exit(ExitStatus::RuntimeError)
    })?;
    parse_config(&text).map_err(|violations| {
        for v in &violations {
            eprintln!("error: {v}");
        }
        exit(ExitStatus::RuntimeError)
    })
}

fn write_generated(kind: MeshKind, subdivisions: u32, n: usize, out: &Path) -> Result<(), String> {
    let m = match kind {
        MeshKind::Sphere => Manifold::sphere(subdivisions, 1.0),
        MeshKind::Torus => Manifold::flat_torus(n, n, 1.0, 1.0),
    }
    .map_err(|e| e.to_string())?;
    let file = File::create(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    let mut w = BufWriter::new(file);
    write_mesh(&m, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| format!("cannot write {}: {e}", out.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit(ExitStatus::RuntimeError) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.experiment.name());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, out_dir, threads, seed_override } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let mut opts = RunOptions { out_dir, threads, seed_override, ..Default::default() };
            opts.versions.insert("fgi-lab".into(), env!("CARGO_PKG_VERSION").into());
            let result = run_scenario(&cfg, &opts);
            if let Some(e) = &result.error {
                eprintln!("error: {e}");
            }
            if let Some(outcome) = &result.outcome {
                for c in &outcome.checks {
                    let mark = if c.pass { "PASS" } else { "FAIL" };
                    println!("{mark} {}: value={:e} bound={:e}", c.name, c.value, c.bound);
                }
            }
            exit(result.status)
        }
        Command::Mesh { kind, subdivisions, n, out } => match write_generated(kind, subdivisions, n, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(msg) => {
                eprintln!("error: {msg}");
                exit(ExitStatus::RuntimeError)
            }
        },
    }
}
