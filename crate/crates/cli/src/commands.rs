//! Subcommand implementations. Each writes its artifacts through an
//! [`ArtifactWriter`] and returns nothing else.

use std::path::Path;

use serde_json::{json, Value};

use horizonlab_core::horizon::{
    scan_barriers, solve_horizon, BarrierReport, HorizonGraph, ScanRange, SolverOptions, UnsGrid,
};
use horizonlab_core::model::{compute_a_hat, CylinderModel};
use horizonlab_core::rescaling::{convergence_report, ConvergenceWindow};
use horizonlab_core::{ConformalField, Submanifold};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{ArtifactWriter, Cell};

fn field_for(cfg: &RunConfig, s: &Submanifold, eps: f64) -> Result<ConformalField, CliError> {
    ConformalField::with_tolerance(s.clone(), eps, cfg.tolerances.quadrature).map_err(CliError::numerical("conformal field"))
}

fn a_hat(cfg: &RunConfig) -> Result<f64, CliError> {
    compute_a_hat(cfg.dims()?).map_err(CliError::numerical("model constants"))
}

pub fn analyze_cylinder(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let model = CylinderModel::new(cfg.dims()?).map_err(CliError::numerical("model constants"))?;
    let h_at = model.mean_curvature(model.a_hat).map_err(CliError::numerical("model cylinder"))?;
    w.json(
        "cylinder.json",
        json!({
            "n": cfg.n,
            "m": cfg.m,
            "gamma": model.dims.gamma(),
            "C": model.c,
            "D": model.d,
            "a_hat": model.a_hat,
            "mean_curvature_at_a_hat": h_at,
        }),
    )?;
    let samples = 201;
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = -2.0 + 4.0 * i as f64 / (samples - 1) as f64;
        let a = model.a_hat * 10f64.powf(t);
        let u = model.u_infinity(a).map_err(CliError::numerical("model cylinder"))?;
        let h = model.mean_curvature(a).map_err(CliError::numerical("model cylinder"))?;
        rows.push(vec![Cell::from(a), Cell::from(a / model.a_hat), Cell::from(u), Cell::from(h)]);
    }
    w.csv("cylinder_curve.csv", &["a", "a_over_a_hat", "u_infinity", "mean_curvature"], rows)
}

fn read_points_csv(path: &Path, n: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("field `field_eval.input_csv`: {e}")))?;
    let mut out = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("field `field_eval.input_csv`: {e}")))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().take(n).map(str::parse::<f64>).collect();
        match parsed {
            Ok(p) if p.len() == n => out.push(p),
            _ if line == 0 => continue, // header row
            _ => {
                return Err(CliError::Config(format!(
                    "field `field_eval.input_csv`: row {} does not hold {n} coordinates",
                    line + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn field_eval(cfg: &RunConfig, config_dir: &Path, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let s = cfg.submanifold()?;
    let n = cfg.n;
    let mut points = cfg.field_eval.points.clone();
    if let Some(p) = &cfg.field_eval.input_csv {
        points.extend(read_points_csv(&config_dir.join(p), n)?);
    }
    if points.is_empty() {
        return Err(CliError::Config("field `field_eval.points`: no evaluation points given".into()));
    }
    let mut header: Vec<String> = vec!["epsilon".into(), "index".into()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.push("u".into());
    header.extend((0..n).map(|i| format!("du{i}")));
    let mut rows = Vec::new();
    for eps in cfg.epsilons() {
        let field = field_for(cfg, &s, eps)?;
        for (i, (x, r)) in points.iter().zip(field.evaluate_batch(&points)).enumerate() {
            let (u, g) = r.map_err(CliError::numerical(format!("field at point {i}")))?;
            let mut row = vec![Cell::from(eps), Cell::from(i)];
            row.extend(x.iter().map(|v| Cell::from(*v)));
            row.push(Cell::from(u));
            row.extend(g.into_iter().map(Cell::from));
            rows.push(row);
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    w.csv("field.csv", &header, rows)
}

fn scan_range(cfg: &RunConfig, s: &Submanifold, eps: f64, a_hat: f64) -> ScanRange {
    ScanRange {
        a_min: cfg.scan.a_min.unwrap_or(a_hat * eps / 20.0),
        a_max: cfg.scan.a_max.unwrap_or((0.95 * s.reach()).min(100.0 * a_hat * eps)),
        samples: cfg.scan.samples,
    }
}

fn grid_for(cfg: &RunConfig, s: &Submanifold) -> Result<UnsGrid, CliError> {
    UnsGrid::build(s, cfg.resolution(), cfg.symmetry_mode()).map_err(CliError::numerical("unit normal bundle grid"))
}

fn barriers_for(cfg: &RunConfig, s: &Submanifold, grid: &UnsGrid, field: &ConformalField, eps: f64) -> Result<BarrierReport, CliError> {
    let range = scan_range(cfg, s, eps, a_hat(cfg)?);
    scan_barriers(field, grid, eps, range).map_err(CliError::numerical(format!("barrier scan at epsilon {eps}")))
}

pub fn scan_barriers_cmd(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let s = cfg.submanifold()?;
    let grid = grid_for(cfg, &s)?;
    let a_hat = a_hat(cfg)?;
    let mut runs = Vec::new();
    let mut tube_rows = Vec::new();
    let mut sphere_rows = Vec::new();
    for eps in cfg.epsilons() {
        let field = field_for(cfg, &s, eps)?;
        let rep = barriers_for(cfg, &s, &grid, &field, eps)?;
        for r in &rep.rows {
            tube_rows.push(vec![Cell::from(eps), Cell::from(r.a), Cell::from(r.a / eps), Cell::from(r.min_h), Cell::from(r.max_h)]);
        }
        for r in &rep.sphere_rows {
            sphere_rows.push(vec![Cell::from(eps), Cell::from(r.a), Cell::from(r.min_h), Cell::from(r.max_h)]);
        }
        runs.push(json!({
            "epsilon": eps,
            "a_hat": a_hat,
            "c_inner": rep.c_inner,
            "c_outer": rep.c_outer,
            "r_outer": rep.r_outer,
            "r_end": rep.r_end,
            "a_hat_bracketed": rep.c_inner < a_hat && a_hat < rep.c_outer,
        }));
    }
    w.json("barriers.json", json!({ "runs": runs }))?;
    w.csv("barrier_scan.csv", &["epsilon", "a", "a_over_epsilon", "min_h", "max_h"], tube_rows)?;
    w.csv("sphere_scan.csv", &["epsilon", "radius", "min_h", "max_h"], sphere_rows)
}

fn horizon_summary(h: &HorizonGraph, a_hat: f64, barriers: Option<&BarrierReport>) -> Value {
    let (psi_min, psi_max) = h.psi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(*p), b.max(*p)));
    let components: Vec<Value> = h
        .components()
        .iter()
        .map(|c| {
            json!({
                "index": c.index,
                "nodes": c.nodes,
                "psi_min": c.min_psi,
                "psi_max": c.max_psi,
                "psi_mean": c.mean_psi,
                "sup_residual": c.sup_residual,
            })
        })
        .collect();
    let certification = barriers.map(|b| {
        let (lo, hi) = b.window();
        json!({
            "window": [lo, hi],
            "inside_window": h.psi.iter().all(|&p| p > lo && p < hi),
            "confined_after_10_steps": h.confined(b, 10),
            "outer_initialization_difference": h.outer_agreement,
        })
    });
    json!({
        "epsilon": h.epsilon,
        "a_hat": a_hat,
        "psi_min": psi_min,
        "psi_max": psi_max,
        "sup_residual": h.sup_residual(),
        "tolerance": h.tolerance,
        "iterations": h.history.len() - 1,
        "converged": h.converged,
        "area": h.area,
        "slope_ratio": h.slope_ratio(),
        "components": components,
        "certification": certification,
    })
}

pub fn find_horizon(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let s = cfg.submanifold()?;
    let grid = grid_for(cfg, &s)?;
    let a_hat = a_hat(cfg)?;
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for eps in cfg.epsilons() {
        let field = field_for(cfg, &s, eps)?;
        let barriers = if cfg.solver.certify { Some(barriers_for(cfg, &s, &grid, &field, eps)?) } else { None };
        let opts = SolverOptions {
            tolerance: cfg.tolerances.residual,
            max_flow_steps: cfg.solver.max_flow_steps,
            max_newton_steps: cfg.solver.max_newton_steps,
            check_outer_initialization: barriers.is_some(),
            barriers: barriers.clone(),
            ..Default::default()
        };
        let h = solve_horizon(&field, &grid, eps, &opts).map_err(CliError::numerical(format!("horizon at epsilon {eps}")))?;
        for (i, node) in grid.nodes().iter().enumerate() {
            rows.push(vec![
                Cell::from(eps),
                Cell::from(node.base_index),
                Cell::from(node.fiber_index),
                Cell::from(node.component),
                Cell::from(h.psi[i]),
                Cell::from(h.residual[i]),
            ]);
        }
        runs.push(horizon_summary(&h, a_hat, barriers.as_ref()));
    }
    w.json("horizon.json", json!({ "mode": format!("{:?}", cfg.symmetry_mode()), "runs": runs }))?;
    w.csv("horizon.csv", &["epsilon", "base_index", "fiber_index", "component", "psi", "residual"], rows)
}

pub fn verify_rescaling(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let s = cfg.submanifold()?;
    let a_hat = a_hat(cfg)?;
    let x = match &cfg.rescaling.x_infinity {
        Some(x) => x.clone(),
        None => s.nearest_point(&vec![1.0; cfg.n]).map_err(CliError::numerical("base point"))?.point,
    };
    let beta1 = cfg.rescaling.beta1.unwrap_or(3.0 * a_hat);
    let beta2 = cfg.rescaling.beta2.unwrap_or(0.5 * a_hat);
    let gamma = cfg.n as f64 - 2.0;
    let window = ConvergenceWindow::lattice(&s, &x, beta1, beta2, gamma, cfg.rescaling.per_axis)
        .map_err(CliError::numerical("convergence window"))?;
    let mut eps = cfg.epsilons();
    eps.sort_by(|a, b| b.total_cmp(a));
    let report = convergence_report(&s, &x, &window, &eps, cfg.tolerances.quadrature)
        .map_err(CliError::numerical("rescaling report"))?;
    let levels: Vec<Value> = report
        .levels
        .iter()
        .map(|l| json!({ "epsilon": l.epsilon, "sup_C0": l.sup_c0, "sup_C1": l.sup_c1, "metric_dev": l.metric_dev }))
        .collect();
    w.json(
        "rescaling.json",
        json!({
            "x_infinity": x,
            "beta1": beta1,
            "beta2": beta2,
            "points": window.grid.len(),
            "levels": levels,
            "sup_C0_strictly_decreasing": report.sup_c0_strictly_decreasing(),
            "sup_C1_strictly_decreasing": report.sup_c1_strictly_decreasing(),
            "max_F_k": report.max_f_k(),
        }),
    )?;
    let n = cfg.n;
    let mut header: Vec<String> = vec!["epsilon".into(), "index".into()];
    header.extend((0..n).map(|i| format!("zeta{i}")));
    header.extend(["f_k".into(), "f_infinity".into()]);
    let rows = report
        .points
        .iter()
        .map(|p| {
            let mut row = vec![Cell::from(p.epsilon), Cell::from(p.index)];
            row.extend(p.zeta.iter().map(|v| Cell::from(*v)));
            row.push(Cell::from(p.f_k));
            row.push(Cell::from(p.f_infinity));
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    w.csv("rescaling_points.csv", &header, rows)
}

pub fn export_mesh(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let s = cfg.submanifold()?;
    let radius = match cfg.mesh.radius {
        Some(r) => r,
        None => a_hat(cfg)? * cfg.epsilons()[0],
    };
    let obj = s
        .export_tube_obj(radius, cfg.mesh.segments, cfg.mesh.rings)
        .map_err(CliError::numerical("tube mesh"))?;
    w.text("tube.obj", &obj)
}
