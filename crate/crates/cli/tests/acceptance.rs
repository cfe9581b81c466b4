//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails. Oracles are computed here,
//! independently of the library code under test.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use horizonlab_cli::{run, Command};
use horizonlab_core::horizon::{
    scan_barriers, solve_horizon, BarrierReport, Resolution, ScanRange, SolverOptions, SymmetryMode, UnsGrid,
};
use horizonlab_core::model::{compute_a_hat, compute_d, cylinder_mean_curvature};
use horizonlab_core::rescaling::{convergence_report, ConvergenceWindow};
use horizonlab_core::{ConformalField, DimensionPair, Submanifold};

// Pinned tolerances.
const SCHWARZSCHILD_RESIDUAL: f64 = 1e-8; // times 1/ε
const SCHWARZSCHILD_PSI: f64 = 1e-4;
const SCHWARZSCHILD_SECONDS: f64 = 30.0;
const A_HAT_CIRCLE: f64 = 1e-12;
const D_QUADRATURE: f64 = 1e-8;
const CONSTANTS_SECONDS: f64 = 5.0;
const ROOT_RESIDUAL: f64 = 1e-10;
const BARRIER_SECONDS: f64 = 120.0;
const R_OUTER_FACTOR: f64 = 10.0;
const SLOPE_RATIO: f64 = 1.0;
const RADIUS_RATIO: f64 = 0.6;
const TWO_POINT_PSI: f64 = 1e-3;
const HARMONICITY: f64 = 1e-4;
const ASYMPTOTIC_REL: f64 = 0.01;

type Check = Result<(bool, String), String>;
type Criterion = (u32, &'static str, fn() -> Check);

fn dims(n: usize, m: usize) -> DimensionPair {
    DimensionPair::new(n, m).unwrap()
}

fn circle() -> Submanifold {
    Submanifold::round_sphere(dims(4, 1), 1.0).unwrap()
}

fn point3() -> Submanifold {
    Submanifold::point_set(dims(3, 0), vec![vec![0.0; 3]]).unwrap()
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

/// Γ at positive integers and half-integers by the recurrence.
fn gamma_half(x: f64) -> f64 {
    let twice = (2.0 * x).round() as i64;
    assert!((2.0 * x - twice as f64).abs() < 1e-12 && twice > 0);
    let mut v = if twice % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut y = if twice % 2 == 0 { 1.0 } else { 0.5 };
    while y < x - 1e-12 {
        v *= y;
        y += 1.0;
    }
    v
}

/// ∫_{ℝ^m}(1+|t|²)^{−(n−2)/2} dt in polar form with r = tan θ, composite Simpson.
fn d_oracle(n: usize, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let shell = 2.0 * PI.powf(m as f64 / 2.0) / gamma_half(m as f64 / 2.0);
    let f = |t: f64| t.sin().powi(m as i32 - 1) * t.cos().powi(n as i32 - m as i32 - 3);
    let k = 20_000;
    let h = FRAC_PI_2 / k as f64;
    let mut s = f(0.0) + f(FRAC_PI_2);
    for i in 1..k {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    shell * s * h / 3.0
}

/// Mean curvature of the model cylinder from the conformal law, with D from the oracle.
fn cylinder_h_oracle(n: usize, m: usize, a: f64) -> f64 {
    let g = (n - m - 2) as f64;
    let nf = n as f64;
    let d = d_oracle(n, m);
    let u = 1.0 + d * a.powf(-g);
    let du = -g * d * a.powf(-g - 1.0);
    u.powf(-2.0 / (nf - 2.0)) * ((n - m - 1) as f64 / a + 2.0 * (nf - 1.0) / (nf - 2.0) * du / u)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let eps = 0.1;
    let s = point3();
    let grid = UnsGrid::build(&s, Resolution::new(1, 64, 32), SymmetryMode::Full).map_err(e)?;
    let field = ConformalField::with_tolerance(s, eps, 1e-12).map_err(e)?;
    let h = solve_horizon(&field, &grid, eps, &SolverOptions::default()).map_err(e)?;
    let secs = start.elapsed().as_secs_f64();
    // isotropic Schwarzschild: H = u^{-2}(2/r + 4u'/u) with u = 1 + ε/r vanishes at r = ε
    let dev = h.psi.iter().fold(0.0f64, |m, p| m.max((p - eps).abs()));
    Ok((
        h.sup_residual() < SCHWARZSCHILD_RESIDUAL / eps && dev < SCHWARZSCHILD_PSI && secs < SCHWARZSCHILD_SECONDS,
        format!("sup|H| = {:.2e}, sup|psi - 0.1| = {dev:.2e}, {secs:.2} s", h.sup_residual()),
    ))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let exact = (3..=9).all(|n| compute_a_hat(dims(n, 0)).unwrap() == 1.0);
    let circle = (compute_a_hat(dims(4, 1)).map_err(e)? - FRAC_PI_2).abs();
    let mut worst: f64 = 0.0;
    for n in 3..=9 {
        for m in 0..=n - 3 {
            let d = compute_d(dims(n, m)).map_err(e)?;
            worst = worst.max((d - d_oracle(n, m)).abs() / d);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        exact && circle < A_HAT_CIRCLE && worst < D_QUADRATURE && secs < CONSTANTS_SECONDS,
        format!("a_hat(n,0) == 1: {exact}; |a_hat(4,1) - pi/2| = {circle:.1e}; max D rel err {worst:.1e}; {secs:.2} s"),
    ))
}

fn criterion_3() -> Check {
    let mut violations = Vec::new();
    let mut worst_root: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for n in 3..=7 {
        for m in 0..=n - 3 {
            let d = dims(n, m);
            let a_hat = compute_a_hat(d).map_err(e)?;
            worst_root = worst_root.max(cylinder_mean_curvature(d, a_hat).map_err(e)?.abs());
            for i in 0..100 {
                // 100 log samples strictly inside each of (â/100, â) and (â, 100â)
                let t = 2.0 * (i as f64 + 0.5) / 100.0;
                let below = a_hat * 10f64.powf(-t);
                let above = a_hat * 10f64.powf(t);
                let hb = cylinder_mean_curvature(d, below).map_err(e)?;
                let ha = cylinder_mean_curvature(d, above).map_err(e)?;
                if hb >= 0.0 || ha <= 0.0 {
                    violations.push((n, m, i));
                }
                for (a, h) in [(below, hb), (above, ha)] {
                    let o = cylinder_h_oracle(n, m, a);
                    worst_oracle = worst_oracle.max((h - o).abs() / o.abs().max(1e-300));
                }
            }
        }
    }
    Ok((
        violations.is_empty() && worst_root < ROOT_RESIDUAL && worst_oracle < 1e-8,
        format!("{} sign violations; max |H(a_hat)| = {worst_root:.1e}; max rel diff from oracle {worst_oracle:.1e}", violations.len()),
    ))
}

fn circle_setup(eps: f64) -> Result<(UnsGrid, ConformalField, BarrierReport), String> {
    let s = circle();
    let grid = UnsGrid::build(&s, Resolution::new(1, 1, 64), SymmetryMode::Reduced1d).map_err(e)?;
    let field = ConformalField::with_tolerance(s, eps, 1e-12).map_err(e)?;
    let range = ScanRange { a_min: FRAC_PI_2 * eps / 20.0, a_max: 0.95, samples: 200 };
    let rep = scan_barriers(&field, &grid, eps, range).map_err(e)?;
    Ok((grid, field, rep))
}

/// Extremes of the conformal-law mean curvature of the tube of radius `a`
/// around the unit circle in ℝ⁴, sampled over the normal colatitude, with
/// the Euclidean tube curvature 2/a + cos θ / (1 + a cos θ).
fn circle_tube_extremes(field: &ConformalField, a: f64) -> Result<(f64, f64), String> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..181 {
        let th = PI * k as f64 / 180.0;
        let nu = [th.cos(), 0.0, th.sin(), 0.0];
        let x = [1.0 + a * nu[0], 0.0, a * nu[2], 0.0];
        let u = field.evaluate_u(&x).map_err(e)?;
        let g = field.evaluate_grad_u(&x).map_err(e)?;
        let dn: f64 = g.iter().zip(&nu).map(|(p, q)| p * q).sum();
        let h = u.powf(-1.0) * (2.0 / a + th.cos() / (1.0 + a * th.cos()) + 3.0 * dn / u);
        lo = lo.min(h);
        hi = hi.max(h);
    }
    Ok((lo, hi))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let eps = 0.05;
    let (_, field, rep) = circle_setup(eps)?;
    let secs = start.elapsed().as_secs_f64();
    let bracket = rep.c_inner < FRAC_PI_2 && FRAC_PI_2 < rep.c_outer;
    let (_, inner_max) = circle_tube_extremes(&field, rep.c_inner * eps)?;
    let (outer_min, _) = circle_tube_extremes(&field, rep.c_outer * eps)?;
    let pattern = inner_max < 0.0
        && outer_min > 0.0
        && rep.rows.iter().filter(|r| r.a <= rep.c_inner * eps).all(|r| r.max_h < 0.0)
        && rep.rows.iter().filter(|r| r.a >= rep.c_outer * eps && r.a <= rep.r_outer).all(|r| r.min_h > 0.0);
    let need = R_OUTER_FACTOR * rep.c_outer * eps;
    Ok((
        bracket && pattern && rep.r_outer >= need && secs < BARRIER_SECONDS,
        format!(
            "C_inner = {:.4} < pi/2 < C_outer = {:.4}: {bracket}; sign pattern: {pattern}; R_outer = {:.4} vs required {need:.4}; {secs:.2} s",
            rep.c_inner, rep.c_outer, rep.r_outer
        ),
    ))
}

fn criterion_5() -> Check {
    let eps = 0.05;
    let (grid, field, rep) = circle_setup(eps)?;
    let opts = SolverOptions { barriers: Some(rep.clone()), ..Default::default() };
    let h = solve_horizon(&field, &grid, eps, &opts).map_err(e)?;
    let (lo, hi) = rep.window();
    let inside = h.psi.iter().all(|&p| p > lo && p < hi);
    Ok((
        h.converged && inside && h.slope_ratio() < SLOPE_RATIO,
        format!("converged: {}; psi in ({lo:.5}, {hi:.5}): {inside}; slope ratio {:.2e}", h.converged, h.slope_ratio()),
    ))
}

fn criterion_6() -> Check {
    let mut d = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        let s = circle();
        let grid = UnsGrid::build(&s, Resolution::new(1, 1, 64), SymmetryMode::Reduced1d).map_err(e)?;
        let field = ConformalField::with_tolerance(s, eps, 1e-12).map_err(e)?;
        let h = solve_horizon(&field, &grid, eps, &SolverOptions::default()).map_err(e)?;
        d.push(h.psi.iter().fold(0.0f64, |m, p| m.max((p / eps - FRAC_PI_2).abs())));
    }
    let ratio = d[2] / d[0];
    Ok((
        d[0] > d[1] && d[1] > d[2] && ratio < RADIUS_RATIO,
        format!("d(0.1) = {:.4e}, d(0.05) = {:.4e}, d(0.025) = {:.4e}, ratio {ratio:.4}", d[0], d[1], d[2]),
    ))
}

fn criterion_7() -> Check {
    let eps = 0.1;
    let s = Submanifold::point_set(dims(3, 0), vec![vec![0.0; 3], vec![10.0, 0.0, 0.0]]).map_err(e)?;
    let grid = UnsGrid::build(&s, Resolution::new(1, 32, 16), SymmetryMode::Full).map_err(e)?;
    let field = ConformalField::with_tolerance(s, eps, 1e-12).map_err(e)?;
    let h = solve_horizon(&field, &grid, eps, &SolverOptions::default()).map_err(e)?;
    let comps = h.components();
    let dev = comps.iter().fold(0.0f64, |m, c| m.max((c.min_psi - eps).abs()).max((c.max_psi - eps).abs()));
    Ok((comps.len() == 2 && dev < TWO_POINT_PSI, format!("{} components; sup|psi - 0.1| = {dev:.4e}", comps.len())))
}

fn criterion_8() -> Check {
    let s = circle();
    let field = ConformalField::with_tolerance(s.clone(), 0.05, 1e-12).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst_lib, mut worst_own) = (0.0f64, 0.0f64);
    let mut count = 0;
    while count < 100 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let dist = s.distance(&x).map_err(e)?;
        if dist < 0.05 {
            continue;
        }
        worst_lib = worst_lib.max(field.harmonicity_residual(&x, None).map_err(e)?);
        // own second differences, normalized by the largest one
        let h = 1e-3 * dist;
        let u0 = field.evaluate_u(&x).map_err(e)?;
        let mut sum = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..4 {
            let mut p = x.clone();
            p[i] += h;
            let up = field.evaluate_u(&p).map_err(e)?;
            p[i] -= 2.0 * h;
            let dn = field.evaluate_u(&p).map_err(e)?;
            let d2 = up - 2.0 * u0 + dn;
            sum += d2;
            scale = scale.max(d2.abs());
        }
        worst_own = worst_own.max(if scale > 0.0 { sum.abs() / scale } else { 0.0 });
        count += 1;
    }
    Ok((
        worst_lib < HARMONICITY && worst_own < HARMONICITY,
        format!("max residual {worst_lib:.2e} (independent stencil {worst_own:.2e}) over 100 points"),
    ))
}

fn criterion_9() -> Check {
    let eps = 0.1;
    let pair = Submanifold::point_set(dims(3, 0), vec![vec![-5.0, 0.0, 0.0], vec![5.0, 0.0, 0.0]]).map_err(e)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, expected, name) in [(point3(), eps, "point"), (pair, 2.0 * eps, "pair"), (circle(), 2.0 * PI * eps, "circle")] {
        let base = 10.0 * s.diameter().max(1.0);
        let radii: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|r| r * base).collect();
        let fit = ConformalField::with_tolerance(s, eps, 1e-12).map_err(e)?.fit_asymptotic_coefficient(&radii).map_err(e)?;
        let rel = (fit.coefficient - expected).abs() / expected;
        ok &= rel < ASYMPTOTIC_REL;
        parts.push(format!("{name} {rel:.2e}"));
    }
    Ok((ok, format!("relative coefficient errors: {}", parts.join(", "))))
}

fn criterion_10() -> Check {
    let eps = [0.2, 0.1, 0.05];
    let a_hat = FRAC_PI_2;
    let s = circle();
    let x = [1.0, 0.0, 0.0, 0.0];
    let w = ConvergenceWindow::lattice(&s, &x, 3.0 * a_hat, a_hat / 2.0, 2.0, 4).map_err(e)?;
    let r = convergence_report(&s, &x, &w, &eps, 1e-12).map_err(e)?;
    let p = point3();
    let o = [0.0; 3];
    let wp = ConvergenceWindow::lattice(&p, &o, 3.0, 0.5, 1.0, 4).map_err(e)?;
    let rp = convergence_report(&p, &o, &wp, &eps, 1e-12).map_err(e)?;
    let zero = rp.levels.iter().all(|l| l.sup_c0 == 0.0 && l.sup_c1 == 0.0);
    let c0: Vec<String> = r.levels.iter().map(|l| format!("{:.3e}", l.sup_c0)).collect();
    Ok((
        r.sup_c0_strictly_decreasing() && zero,
        format!("circle sup C0: {}; point deviations identically 0: {zero}", c0.join(", ")),
    ))
}

fn criterion_11() -> Check {
    let root = tempfile::tempdir().map_err(e)?;
    let single = root.path().join("single.json");
    let multi = root.path().join("multi.json");
    fs::write(
        &single,
        r#"{"n":4,"m":1,"shape":{"sphere":{"radius":1}},"epsilon":0.05,
            "grid":{"colatitude":32},"field_eval":{"points":[[0,0,0.5,0],[2,0,0,1]]}}"#,
    )
    .map_err(e)?;
    fs::write(&multi, r#"{"n":4,"m":1,"shape":{"sphere":{"radius":1}},"epsilon":[0.2,0.1,0.05]}"#).map_err(e)?;
    let cmds = [
        (Command::AnalyzeCylinder, &single),
        (Command::FieldEval, &single),
        (Command::ScanBarriers, &single),
        (Command::FindHorizon, &single),
        (Command::VerifyRescaling, &multi),
        (Command::ExportMesh, &single),
    ];
    let mut compared = 0;
    let mut differing = Vec::new();
    for (cmd, cfg) in cmds {
        let a = root.path().join(format!("{}-a", cmd.name()));
        let b = root.path().join(format!("{}-b", cmd.name()));
        for dir in [&a, &b] {
            run(cmd, cfg, Some(dir)).map_err(e)?;
        }
        for entry in fs::read_dir(&a).map_err(e)? {
            let name = entry.map_err(e)?.file_name();
            if name == "manifest.json" {
                continue;
            }
            compared += 1;
            let read = |d: &Path| fs::read(d.join(&name)).unwrap_or_default();
            if read(&a) != read(&b) {
                differing.push(name.to_string_lossy().into_owned());
            }
        }
    }
    Ok((compared > 0 && differing.is_empty(), format!("{compared} artifacts compared; differing: {differing:?}")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "Schwarzschild exactness", criterion_1),
        (2, "model constants", criterion_2),
        (3, "cylinder sign structure", criterion_3),
        (4, "barrier bracketing", criterion_4),
        (5, "horizon confinement and graphicality", criterion_5),
        (6, "rescaled radius limit", criterion_6),
        (7, "two-point horizon", criterion_7),
        (8, "harmonicity", criterion_8),
        (9, "asymptotic coefficient", criterion_9),
        (10, "rescaled convergence", criterion_10),
        (11, "determinism", criterion_11),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, title, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let (passed, detail) = match check() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        println!("{} criterion {id:>2} ({title}): {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
