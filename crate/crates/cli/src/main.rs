use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use finsler_cli::{run, summary, Command, Flags, Scene};
use finsler_core::geometry::SignatureConvention;

#[derive(Parser)]
#[command(
    name = "finsler",
    version,
    about = "Berwald and metrizability diagnostics for Finsler spacetimes"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Admissibility and local geometry at every sample.
    Probe(Common),
    /// Direction dependence of the Chern–Rund connection.
    Berwald(Common),
    /// Ricci tensor of the affine connection and its skew part.
    Obstruction(Common),
    /// Causal classification of an (alpha, beta) family.
    Causal(Common),
    /// Non-metricity of the affine connection against a reference metric.
    Nonmetricity(Common),
    /// All of the above.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Scene file (JSON).
    scene: PathBuf,
    /// Output directory for report.json.
    #[arg(long, env = "FINSLER_OUT_DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    tol_berwald: Option<f64>,
    #[arg(long)]
    tol_sym: Option<f64>,
    /// Number of fibre directions used by the Berwald test.
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// mostly-minus (+---) or mostly-plus (-+++).
    #[arg(long, value_parser = parse_convention, allow_hyphen_values = true)]
    signature_convention: Option<SignatureConvention>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_convention(s: &str) -> Result<SignatureConvention, String> {
    SignatureConvention::from_label(s).ok_or_else(|| format!("unknown signature convention `{s}`"))
}

fn execute(command: Command, args: Common) -> Result<i32> {
    let scene =
        Scene::from_path(&args.scene).map_err(|e| anyhow!("{}: {e}", args.scene.display()))?;
    let flags = Flags {
        tol_berwald: args.tol_berwald,
        tol_sym: args.tol_sym,
        directions: args.directions,
        seed: args.seed,
        signature_convention: args.signature_convention,
        threads: args.threads,
    };
    let report = run(command, &scene, &flags)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("report.json");
    std::fs::write(&path, report.to_json())
        .with_context(|| format!("writing {}", path.display()))?;
    print!("{}", summary(&report));
    println!("report written to {}", path.display());
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Probe(a) => (Command::Probe, a),
        Sub::Berwald(a) => (Command::Berwald, a),
        Sub::Obstruction(a) => (Command::Obstruction, a),
        Sub::Causal(a) => (Command::Causal, a),
        Sub::Nonmetricity(a) => (Command::Nonmetricity, a),
        Sub::Report(a) => (Command::Report, a),
    };
    match execute(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
