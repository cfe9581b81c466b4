//! Command-line front end: configuration, subcommand dispatch and
//! deterministic artifact emission.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::{parse_config, RunConfig};
pub use error::CliError;
use output::{to_json_string, ArtifactWriter, Cell};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    AnalyzeCylinder,
    FieldEval,
    ScanBarriers,
    FindHorizon,
    VerifyRescaling,
    ExportMesh,
    RunAcceptance,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::AnalyzeCylinder => "analyze-cylinder",
            Command::FieldEval => "field-eval",
            Command::ScanBarriers => "scan-barriers",
            Command::FindHorizon => "find-horizon",
            Command::VerifyRescaling => "verify-rescaling",
            Command::ExportMesh => "export-mesh",
            Command::RunAcceptance => "run-acceptance",
        }
    }
}

/// Files written by a successful run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub artifacts: Vec<String>,
    pub config_hash: String,
}

/// Read, validate and run. `out` overrides the config's `output_dir`.
pub fn run(command: Command, config_path: &Path, out: Option<&Path>) -> Result<RunSummary, CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = parse_config(&text)?;
    let out_dir = match (out, &cfg.output_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => PathBuf::from(o),
        (None, None) => PathBuf::from("out"),
    };
    let result = run_with_config(command, &cfg, config_path, &out_dir);
    if let Err(e) = &result {
        if fs::create_dir_all(&out_dir).is_ok() {
            let _ = fs::write(out_dir.join("error.json"), to_json_string(&e.to_json()));
        }
    }
    result
}

pub fn run_with_config(command: Command, cfg: &RunConfig, config_path: &Path, out_dir: &Path) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let hash = cfg.hash();
    let mut w = ArtifactWriter::new(out_dir, &hash)?;
    let config_dir = config_path.parent().unwrap_or(Path::new("."));
    let outcome = match command {
        Command::AnalyzeCylinder => commands::analyze_cylinder(cfg, &mut w),
        Command::FieldEval => commands::field_eval(cfg, config_dir, &mut w),
        Command::ScanBarriers => commands::scan_barriers_cmd(cfg, &mut w),
        Command::FindHorizon => commands::find_horizon(cfg, &mut w),
        Command::VerifyRescaling => commands::verify_rescaling(cfg, &mut w),
        Command::ExportMesh => commands::export_mesh(cfg, &mut w),
        Command::RunAcceptance => write_acceptance(&mut w),
    };
    let manifest = json!({
        "command": command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "config": cfg.echo(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "artifacts": w.written(),
        "status": if outcome.is_ok() { "ok" } else { "error" },
    });
    fs::write(out_dir.join("manifest.json"), to_json_string(&manifest))?;
    outcome?;
    Ok(RunSummary { out_dir: out_dir.to_path_buf(), artifacts: w.written().to_vec(), config_hash: hash })
}

fn write_acceptance(w: &mut ArtifactWriter) -> Result<(), CliError> {
    let results = acceptance::run_all();
    for r in &results {
        println!("[{}] {:>2} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.title, r.detail);
    }
    let rows = results
        .iter()
        .map(|r| {
            vec![
                Cell::from(r.id as usize),
                Cell::Text(r.title.to_string()),
                Cell::Text(if r.passed { "pass" } else { "fail" }.to_string()),
                Cell::Text(r.detail.clone()),
            ]
        })
        .collect();
    w.csv("acceptance.csv", &["criterion", "title", "status", "detail"], rows)?;
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    w.json(
        "acceptance.json",
        json!({
            "criteria": results.iter().map(|r| json!({"id": r.id, "title": r.title, "passed": r.passed, "detail": r.detail})).collect::<Vec<_>>(),
            "failed": failed,
        }),
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!("criteria {} failed", failed.join(", "))))
    }
}
