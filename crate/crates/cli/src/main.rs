use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qhd_cli::{parse_scenario, run_command, Command, RunOptions};
use qhd_core::dynamics::Flavor;

#[derive(Parser)]
#[command(name = "qhd", version, about = "Kropina geometry of quantum-hydrodynamic motion")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Kropina,
    Riemann,
    Newton,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Kropina => Flavor::Kropina,
            FlavorArg::Riemann => Flavor::Riemann,
            FlavorArg::Newton => Flavor::Newton,
        }
    }
}

#[derive(clap::Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// CSV of evaluation points `t,x,y,z`; defaults to a lattice over the domain.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "qhd-out")]
    out: PathBuf,
    /// Seed for random tangent samples; overrides `numerics.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Oracle and invariant checks with a pass/fail table.
    Validate(Common),
    /// Associated metric, fundamental tensor and determinant dumps.
    Metric(Common),
    /// Integrate one trajectory.
    Geodesic {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "kropina")]
        flavor: FlavorArg,
    },
    /// Deviation between two trajectory flavors in physical time.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        a: FlavorArg,
        #[arg(long, value_enum)]
        b: FlavorArg,
    },
    /// Navigation data and Zermelo residuals.
    Zermelo(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, common, flavor, a, b) = match cli.command {
        Cmd::Validate(c) => (Command::Validate, c, None, None, None),
        Cmd::Metric(c) => (Command::Metric, c, None, None, None),
        Cmd::Geodesic { common, flavor } => (Command::Geodesic, common, Some(flavor), None, None),
        Cmd::Compare { common, a, b } => (Command::Compare, common, None, Some(a), Some(b)),
        Cmd::Zermelo(c) => (Command::Zermelo, c, None, None, None),
    };
    let opts = RunOptions {
        points: common.points,
        flavor: flavor.map_or(Flavor::Kropina, Flavor::from),
        a: a.map(Flavor::from),
        b: b.map(Flavor::from),
        out: common.out,
        seed: common.seed,
    };
    let result = parse_scenario(&common.scenario).and_then(|cfg| run_command(command, &cfg, &opts));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.manifest.passed() {
                println!("all checks passed");
                ExitCode::SUCCESS
            } else {
                let failed: Vec<&str> =
                    outcome.manifest.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                println!("failed checks: {}", failed.join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
