use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use horizonlab_cli::output::to_json_string;
use horizonlab_cli::{run, Command};

#[derive(Parser)]
#[command(name = "horizonlab", version, about = "Conformal metrics concentrated near submanifolds and their apparent horizons")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Model cylinder constants C, D, â and the curve H(a)
    AnalyzeCylinder(Common),
    /// Evaluate u and ∇u at configured points
    FieldEval(Common),
    /// Scan tube and coordinate-sphere mean curvature for barriers
    ScanBarriers(Common),
    /// Solve for the apparent horizon
    FindHorizon(Common),
    /// Convergence of the rescaled conformal factor
    VerifyRescaling(Common),
    /// Export a tube mesh as OBJ
    ExportMesh(Common),
    /// Run the acceptance criteria and write a pass/fail table
    RunAcceptance(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::AnalyzeCylinder(c) => (Command::AnalyzeCylinder, c),
        Sub::FieldEval(c) => (Command::FieldEval, c),
        Sub::ScanBarriers(c) => (Command::ScanBarriers, c),
        Sub::FindHorizon(c) => (Command::FindHorizon, c),
        Sub::VerifyRescaling(c) => (Command::VerifyRescaling, c),
        Sub::ExportMesh(c) => (Command::ExportMesh, c),
        Sub::RunAcceptance(c) => (Command::RunAcceptance, c),
    };
    match run(command, &common.config, common.out.as_deref()) {
        Ok(summary) => {
            for a in &summary.artifacts {
                println!("{}", summary.out_dir.join(a).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("{}", to_json_string(&e.to_json()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
