use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deformq_cli::{emit_report, run_scenario, CliError, Format, Kind, Scenario};

#[derive(Parser)]
#[command(name = "deformq", version, about = "Runs deformation checks and emits reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Truncation order
    #[arg(long, global = true)]
    order: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file
    Verify { scenario: PathBuf },
    /// First-order ⋆-commutator table for a family or `cosmocom` / `bhcom`
    Table { family: String },
    /// Deformed curvature of a model (`schwarzschild-killing` or a model id)
    Geometry { model: String },
    /// Green operator identities, plus mode numerics for kappa-minkowski
    Green { model: String },
    /// Power-spectrum ratio and S-map duality
    Spectrum {
        #[arg(long, default_value_t = 0.3)]
        lambda: f64,
        #[arg(long, default_value_t = 4.0)]
        kmax: f64,
    },
    /// z = 2 one-loop divergence fit
    Loop {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
    },
}

fn scenario(cli: &Cli) -> Result<Scenario, CliError> {
    let mut sc = match &cli.command {
        Command::Verify { scenario } => {
            let text = std::fs::read_to_string(scenario)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", scenario.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", scenario.display())))?
        }
        Command::Table { family } => Scenario { target: Some(family.clone()), ..Scenario::new(Kind::Table) },
        Command::Geometry { model } => Scenario { target: Some(model.clone()), ..Scenario::new(Kind::Geometry) },
        Command::Green { model } => Scenario { target: Some(model.clone()), ..Scenario::new(Kind::Green) },
        Command::Spectrum { lambda, kmax } => Scenario {
            params: BTreeMap::from([("lambda".to_string(), *lambda), ("kmax".to_string(), *kmax)]),
            ..Scenario::new(Kind::Spectrum)
        },
        Command::Loop { beta, ratio } => Scenario {
            params: BTreeMap::from([("beta".to_string(), *beta), ("ratio".to_string(), *ratio)]),
            ..Scenario::new(Kind::Loop)
        },
    };
    if cli.order.is_some() {
        sc.order = cli.order;
    }
    if cli.seed.is_some() {
        sc.seed = cli.seed;
    }
    if let Some(out) = &cli.out {
        sc.out = Some(out.display().to_string());
    }
    if cli.format.is_some() {
        sc.format = cli.format;
    }
    Ok(sc)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = scenario(&cli).and_then(|sc| run_scenario(&sc).map(|r| (sc, r)));
    let (sc, report) = match result {
        Ok(x) => x,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let bytes = emit_report(&report, sc.format.unwrap_or(Format::Json));
    let written = match &sc.out {
        Some(path) => std::fs::write(path, &bytes),
        None => std::io::stdout().write_all(&bytes),
    };
    if let Err(e) = written {
        eprintln!("config error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
