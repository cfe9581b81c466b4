//! Reproduction harness behind `run-acceptance`: every acceptance criterion
//! evaluated on its fixed configuration, one result row each.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use horizonlab_core::horizon::{scan_barriers, solve_horizon, Resolution, ScanRange, SolverOptions, SymmetryMode, UnsGrid};
use horizonlab_core::model::{compute_a_hat, compute_d, cylinder_mean_curvature};
use horizonlab_core::quadrature::integrate;
use horizonlab_core::rescaling::{convergence_report, ConvergenceWindow};
use horizonlab_core::special::sphere_area;
use horizonlab_core::{ConformalField, DimensionPair, Error, Submanifold};

use crate::config::parse_config;
use crate::Command;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = Result<(bool, String), Error>;

fn dims(n: usize, m: usize) -> DimensionPair {
    DimensionPair::new(n, m).expect("valid dimension pair")
}

fn circle() -> Submanifold {
    Submanifold::round_sphere(dims(4, 1), 1.0).expect("unit circle")
}

fn point3() -> Submanifold {
    Submanifold::point_set(dims(3, 0), vec![vec![0.0; 3]]).expect("single point")
}

fn schwarzschild() -> Outcome {
    let start = Instant::now();
    let eps = 0.1;
    let s = point3();
    let grid = UnsGrid::build(&s, Resolution::new(1, 64, 32), SymmetryMode::Full)?;
    let field = ConformalField::with_tolerance(s, eps, 1e-12)?;
    let h = solve_horizon(&field, &grid, eps, &SolverOptions::default())?;
    let dev = h.psi.iter().fold(0.0f64, |m, p| m.max((p - eps).abs()));
    let secs = start.elapsed().as_secs_f64();
    let ok = h.sup_residual() < 1e-8 / eps && dev < 1e-4 && secs < 30.0;
    Ok((ok, format!("sup|H| = {:.3e}, sup|psi - eps| = {dev:.3e}, within 30 s: {}", h.sup_residual(), secs < 30.0)))
}

/// |S^{m−1}| ∫_0^{π/2} sin^{m−1} θ cos^{n−m−3} θ dθ, the radial form of D after r = tan θ.
fn d_by_quadrature(n: usize, m: usize) -> Result<f64, Error> {
    if m == 0 {
        return Ok(1.0);
    }
    let f = |t: f64| [t.sin().powi(m as i32 - 1) * t.cos().powi(n as i32 - m as i32 - 3)];
    let r = integrate(f, &[0.0, FRAC_PI_2], 1e-14, 0.0, 2000)?;
    Ok(sphere_area(m - 1) * r.value[0])
}

fn model_constants() -> Outcome {
    let start = Instant::now();
    let exact = (3..=9).all(|n| compute_a_hat(dims(n, 0)).map(|a| a == 1.0).unwrap_or(false));
    let circle_err = (compute_a_hat(dims(4, 1))? - FRAC_PI_2).abs();
    let mut worst: f64 = 0.0;
    for n in 3..=9 {
        for m in 0..=n - 3 {
            let d = compute_d(dims(n, m))?;
            worst = worst.max((d - d_by_quadrature(n, m)?).abs() / d);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = exact && circle_err < 1e-12 && worst < 1e-8 && secs < 5.0;
    Ok((ok, format!("a_hat(n,0) = 1: {exact}, |a_hat(4,1) - pi/2| = {circle_err:.1e}, D rel err {worst:.1e}")))
}

fn sign_structure() -> Outcome {
    let mut worst_root: f64 = 0.0;
    let mut bad = Vec::new();
    for n in 3..=7 {
        for m in 0..=n - 3 {
            let d = dims(n, m);
            let a_hat = compute_a_hat(d)?;
            worst_root = worst_root.max(cylinder_mean_curvature(d, a_hat)?.abs());
            for i in 1..=100 {
                let t = 2.0 * i as f64 / 101.0;
                let below = a_hat * 10f64.powf(-t);
                let above = a_hat * 10f64.powf(t);
                if cylinder_mean_curvature(d, below)? >= 0.0 || cylinder_mean_curvature(d, above)? <= 0.0 {
                    bad.push((n, m));
                    break;
                }
            }
        }
    }
    Ok((bad.is_empty() && worst_root < 1e-10, format!("sign violations {bad:?}, max |H(a_hat)| = {worst_root:.1e}")))
}

fn circle_report(eps: f64) -> Result<(UnsGrid, ConformalField, horizonlab_core::BarrierReport), Error> {
    let s = circle();
    let grid = UnsGrid::build(&s, Resolution::new(1, 1, 64), SymmetryMode::Reduced1d)?;
    let field = ConformalField::with_tolerance(s, eps, 1e-12)?;
    let a_hat = FRAC_PI_2;
    let rep = scan_barriers(&field, &grid, eps, ScanRange { a_min: a_hat * eps / 20.0, a_max: 0.95, samples: 200 })?;
    Ok((grid, field, rep))
}

fn barrier_bracketing() -> Outcome {
    let start = Instant::now();
    let eps = 0.05;
    let (_, _, rep) = circle_report(eps)?;
    let bracket = rep.c_inner < FRAC_PI_2 && FRAC_PI_2 < rep.c_outer;
    let inner_ok = rep.rows.iter().filter(|r| r.a <= rep.c_inner * eps).all(|r| r.max_h < 0.0);
    let outer_ok = rep.rows.iter().filter(|r| r.a >= rep.c_outer * eps && r.a <= rep.r_outer).all(|r| r.min_h > 0.0);
    let reach_ok = rep.r_outer >= 10.0 * rep.c_outer * eps;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        bracket && inner_ok && outer_ok && reach_ok && secs < 120.0,
        format!(
            "C_inner = {:.4}, C_outer = {:.4}, R_outer = {:.4} (need >= {:.4}), signs ok: {}",
            rep.c_inner,
            rep.c_outer,
            rep.r_outer,
            10.0 * rep.c_outer * eps,
            inner_ok && outer_ok
        ),
    ))
}

fn confinement() -> Outcome {
    let eps = 0.05;
    let (grid, field, rep) = circle_report(eps)?;
    let opts = SolverOptions { barriers: Some(rep.clone()), ..Default::default() };
    let h = solve_horizon(&field, &grid, eps, &opts)?;
    let (lo, hi) = rep.window();
    let inside = h.psi.iter().all(|&p| p > lo && p < hi);
    Ok((
        h.converged && inside && h.slope_ratio() < 1.0,
        format!("converged {}, inside ({lo:.5}, {hi:.5}): {inside}, slope ratio {:.3e}", h.converged, h.slope_ratio()),
    ))
}

fn model_radius_deviation(eps: f64) -> Result<f64, Error> {
    let s = circle();
    let grid = UnsGrid::build(&s, Resolution::new(1, 1, 64), SymmetryMode::Reduced1d)?;
    let field = ConformalField::with_tolerance(s, eps, 1e-12)?;
    let h = solve_horizon(&field, &grid, eps, &SolverOptions::default())?;
    Ok(h.psi.iter().fold(0.0f64, |m, p| m.max((p / eps - FRAC_PI_2).abs())))
}

fn radius_limit() -> Outcome {
    let d: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&e| model_radius_deviation(e)).collect::<Result<_, _>>()?;
    let ratio = d[2] / d[0];
    Ok((d[0] > d[1] && d[1] > d[2] && ratio < 0.6, format!("d = {:.4e}, {:.4e}, {:.4e}; ratio {ratio:.3}", d[0], d[1], d[2])))
}

fn two_points() -> Outcome {
    let eps = 0.1;
    let s = Submanifold::point_set(dims(3, 0), vec![vec![0.0; 3], vec![10.0, 0.0, 0.0]])?;
    let grid = UnsGrid::build(&s, Resolution::new(1, 32, 16), SymmetryMode::Full)?;
    let field = ConformalField::with_tolerance(s, eps, 1e-12)?;
    let h = solve_horizon(&field, &grid, eps, &SolverOptions::default())?;
    let comps = h.components();
    let dev = comps.iter().fold(0.0f64, |m, c| m.max((c.min_psi - eps).abs()).max((c.max_psi - eps).abs()));
    Ok((comps.len() == 2 && dev < 1e-3, format!("{} components, sup|psi - eps| = {dev:.4e}", comps.len())))
}

fn harmonicity() -> Outcome {
    let s = circle();
    let field = ConformalField::with_tolerance(s.clone(), 0.05, 1e-12)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 100 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if s.distance(&x)? < 0.05 {
            continue;
        }
        worst = worst.max(field.harmonicity_residual(&x, None)?);
        count += 1;
    }
    Ok((worst < 1e-4, format!("max residual {worst:.3e} over 100 points")))
}

fn asymptotics() -> Outcome {
    let eps = 0.1;
    let pair = Submanifold::point_set(dims(3, 0), vec![vec![-5.0, 0.0, 0.0], vec![5.0, 0.0, 0.0]])?;
    let cases = [(point3(), eps, "point"), (pair, 2.0 * eps, "pair"), (circle(), 2.0 * PI * eps, "circle")];
    let mut parts = Vec::new();
    let mut ok = true;
    for (s, expected, name) in cases {
        let radii: Vec<f64> = [100.0, 200.0, 400.0, 800.0].iter().map(|r| r * (1.0 + s.diameter())).collect();
        let fit = ConformalField::with_tolerance(s, eps, 1e-12)?.fit_asymptotic_coefficient(&radii)?;
        let rel = (fit.coefficient - expected).abs() / expected;
        ok &= rel < 0.01;
        parts.push(format!("{name} {rel:.2e}"));
    }
    Ok((ok, format!("relative errors: {}", parts.join(", "))))
}

fn rescaling() -> Outcome {
    let eps = [0.2, 0.1, 0.05];
    let a_hat = FRAC_PI_2;
    let s = circle();
    let x = [1.0, 0.0, 0.0, 0.0];
    let w = ConvergenceWindow::lattice(&s, &x, 3.0 * a_hat, a_hat / 2.0, 2.0, 4)?;
    let r = convergence_report(&s, &x, &w, &eps, 1e-12)?;
    let p = point3();
    let origin = [0.0; 3];
    let wp = ConvergenceWindow::lattice(&p, &origin, 3.0, 0.5, 1.0, 4)?;
    let rp = convergence_report(&p, &origin, &wp, &eps, 1e-12)?;
    let point_zero = rp.levels.iter().all(|l| l.sup_c0 == 0.0);
    let c0: Vec<String> = r.levels.iter().map(|l| format!("{:.3e}", l.sup_c0)).collect();
    Ok((r.sup_c0_strictly_decreasing() && point_zero, format!("circle sup C0 {}, point identically 0: {point_zero}", c0.join(" > "))))
}

fn determinism() -> Outcome {
    let cfg_text = r#"{"n":3,"m":0,"shape":{"points":[[0,0,0]]},"epsilon":0.1,"grid":{"azimuth":16,"colatitude":8}}"#;
    let io = |e: std::io::Error| Error::Domain(e.to_string());
    let root = tempfile::tempdir().map_err(io)?;
    let cfg_path = root.path().join("config.json");
    fs::write(&cfg_path, cfg_text).map_err(io)?;
    let cfg = parse_config(cfg_text).map_err(|e| Error::Domain(e.to_string()))?;
    let mut identical = true;
    let mut files = 0;
    for cmd in [Command::AnalyzeCylinder, Command::FindHorizon, Command::ExportMesh] {
        let a = root.path().join(format!("{}-a", cmd.name()));
        let b = root.path().join(format!("{}-b", cmd.name()));
        for dir in [&a, &b] {
            crate::run_with_config(cmd, &cfg, &cfg_path, dir).map_err(|e| Error::Domain(e.to_string()))?;
        }
        for entry in fs::read_dir(&a).map_err(io)? {
            let name = entry.map_err(io)?.file_name();
            if name == "manifest.json" {
                continue;
            }
            files += 1;
            identical &= fs::read(a.join(&name)).map_err(io)? == fs::read(b.join(&name)).map_err(io)?;
        }
    }
    Ok((identical && files > 0, format!("{files} artifacts compared, identical: {identical}")))
}

pub const CRITERIA: [(u32, &str); 11] = [
    (1, "Schwarzschild exactness"),
    (2, "model constants"),
    (3, "cylinder sign structure"),
    (4, "barrier bracketing"),
    (5, "horizon confinement and graphicality"),
    (6, "rescaled radius limit"),
    (7, "two-point horizon"),
    (8, "harmonicity"),
    (9, "asymptotic coefficient"),
    (10, "rescaled convergence"),
    (11, "determinism"),
];

pub fn run_criterion(id: u32) -> CriterionResult {
    let outcome = match id {
        1 => schwarzschild(),
        2 => model_constants(),
        3 => sign_structure(),
        4 => barrier_bracketing(),
        5 => confinement(),
        6 => radius_limit(),
        7 => two_points(),
        8 => harmonicity(),
        9 => asymptotics(),
        10 => rescaling(),
        11 => determinism(),
        _ => Err(Error::Domain(format!("unknown criterion {id}"))),
    };
    let title = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    let (passed, detail) = match outcome {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, title, passed, detail }
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run_criterion(c.0)).collect()
}
