use horizonlab_core::model::DimensionPair;
use horizonlab_core::submanifold::{Submanifold, TubeSurface};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dims(n: usize, m: usize) -> DimensionPair {
    DimensionPair::new(n, m).unwrap()
}

fn normalize(v: &mut [f64]) {
    let l = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= l);
}

/// Finite-difference-of-area oracle for the Euclidean tube mean curvature.
///
/// The tube is parametrized near (x, ω) by tangent offsets s (through the
/// nearest-point map) and fibre offsets φ (projected back onto the normal
/// space). The parameter Jacobian is linear in the radius, so the area
/// density J(a) can be evaluated at any radius from one set of difference
/// quotients, and H = d/da ln J(a) because the tube normal is ω.
fn area_variation_oracle(s: &Submanifold, x: &[f64], omega: &[f64], a: f64) -> f64 {
    let n = x.len();
    let frame = s.normal_frame(x).unwrap();
    let mut fibre_dirs: Vec<Vec<f64>> = Vec::new();
    for v in &frame.normals {
        let mut w = v.clone();
        for u in std::iter::once(omega).chain(fibre_dirs.iter().map(|f| f.as_slice())) {
            let c: f64 = w.iter().zip(u).map(|(p, q)| p * q).sum();
            w.iter_mut().zip(u).for_each(|(p, q)| *p -= c * q);
        }
        let l = w.iter().map(|t| t * t).sum::<f64>().sqrt();
        if l > 1e-6 {
            w.iter_mut().for_each(|t| *t /= l);
            fibre_dirs.push(w);
        }
    }
    let params = frame.tangents.len() + fibre_dirs.len();
    assert_eq!(params, n - 1);

    let chart = |p: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let m = frame.tangents.len();
        let mut y = x.to_vec();
        for (i, t) in frame.tangents.iter().enumerate() {
            y.iter_mut().zip(t).for_each(|(a, b)| *a += p[i] * b);
        }
        let q = s.nearest_point(&y).unwrap().point;
        let qf = s.normal_frame(&q).unwrap();
        let mut w = omega.to_vec();
        for (j, f) in fibre_dirs.iter().enumerate() {
            w.iter_mut().zip(f).for_each(|(a, b)| *a += p[m + j] * b);
        }
        for t in &qf.tangents {
            let c: f64 = w.iter().zip(t).map(|(p, q)| p * q).sum();
            w.iter_mut().zip(t).for_each(|(a, b)| *a -= c * b);
        }
        normalize(&mut w);
        (q, w)
    };

    let step = 1e-5;
    let mut dq = DMatrix::zeros(n, params);
    let mut dw = DMatrix::zeros(n, params);
    for k in 0..params {
        let mut pp = vec![0.0; params];
        let mut pm = vec![0.0; params];
        pp[k] = step;
        pm[k] = -step;
        let (qp, wp) = chart(&pp);
        let (qm, wm) = chart(&pm);
        for i in 0..n {
            dq[(i, k)] = (qp[i] - qm[i]) / (2.0 * step);
            dw[(i, k)] = (wp[i] - wm[i]) / (2.0 * step);
        }
    }
    let log_density = |r: f64| {
        let jac = &dq + &dw * r;
        (jac.transpose() * &jac).determinant().ln() * 0.5
    };
    let diff = |h: f64| (log_density(a + h) - log_density(a - h)) / (2.0 * h);
    let h = 1e-4 * a;
    (4.0 * diff(0.5 * h) - diff(h)) / 3.0
}

#[test]
fn circle_tube_curvature_matches_area_oracle() {
    let s = Submanifold::round_sphere(dims(4, 1), 1.0).unwrap();
    let t: f64 = 0.4;
    let x = [t.cos(), t.sin(), 0.0, 0.0];
    let a = 0.1;
    let tube = TubeSurface::new(s.clone(), a).unwrap();
    for (c, p, q) in [(0.3f64, 0.9f64, 0.2f64), (-0.8, 0.1, 0.5), (1.0, 0.0, 0.0)] {
        let mut omega = [c * x[0], c * x[1], p, q];
        normalize(&mut omega);
        let closed = s.euclid_tube_mean_curvature(&tube, &x, &omega).unwrap();
        let oracle = area_variation_oracle(&s, &x, &omega, a);
        assert!((closed - oracle).abs() < 1e-6, "closed {closed} oracle {oracle}");
    }
}

#[test]
fn sphere_and_product_tube_curvature_match_area_oracle() {
    let s2 = Submanifold::round_sphere(dims(6, 2), 1.3).unwrap();
    let x = [0.0, 1.3 * 0.6, 1.3 * 0.8, 0.0, 0.0, 0.0];
    let mut omega = [0.0, -0.6 * 0.5, -0.8 * 0.5, 0.4, 0.3, 0.7];
    normalize(&mut omega);
    let tube = TubeSurface::new(s2.clone(), 0.2).unwrap();
    let closed = s2.euclid_tube_mean_curvature(&tube, &x, &omega).unwrap();
    assert!((closed - area_variation_oracle(&s2, &x, &omega, 0.2)).abs() < 1e-6);

    let p = Submanifold::product_of_spheres(dims(7, 2), &[(1, 1.0), (1, 0.6)]).unwrap();
    let x = [0.6, 0.8, 0.0, 0.6, 0.0, 0.0, 0.0];
    let mut omega = [0.6 * 0.5, 0.8 * 0.5, 0.0, -0.7, 0.0, 0.2, 0.4];
    normalize(&mut omega);
    let tube = TubeSurface::new(p.clone(), 0.15).unwrap();
    let closed = p.euclid_tube_mean_curvature(&tube, &x, &omega).unwrap();
    assert!((closed - area_variation_oracle(&p, &x, &omega, 0.15)).abs() < 1e-6);
}

#[test]
fn tube_curvature_deviation_is_bounded() {
    // |H(a) − (n−m−1)/a| stays bounded as a → 0
    let s = Submanifold::round_sphere(dims(5, 2), 1.0).unwrap();
    let x = [0.0, 0.0, 1.0, 0.0, 0.0];
    let omega = [0.0, 0.0, -0.6, 0.8, 0.0];
    let mut worst: f64 = 0.0;
    for k in 0..30 {
        let a = 0.5 * 10f64.powf(-0.2 * k as f64);
        let tube = TubeSurface::new(s.clone(), a).unwrap();
        let h = s.euclid_tube_mean_curvature(&tube, &x, &omega).unwrap();
        worst = worst.max((h - 2.0 / a).abs());
    }
    assert!(worst < 2.0, "fitted O(1) constant {worst}");
}

fn unit_normal_at(t: f64, c: f64, p: f64, q: f64) -> ([f64; 4], [f64; 4]) {
    let x = [t.cos(), t.sin(), 0.0, 0.0];
    let mut w = [c * x[0], c * x[1], p, q];
    normalize(&mut w);
    (x, w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tube_point_round_trip(
        t in 0.0..std::f64::consts::TAU,
        c in -1.0..1.0f64, p in -1.0..1.0f64, q in -1.0..1.0f64,
        frac in 0.01..0.9f64,
    ) {
        prop_assume!(c * c + p * p + q * q > 1e-3);
        let s = Submanifold::round_sphere(dims(4, 1), 1.0).unwrap();
        let (x, w) = unit_normal_at(t, c, p, q);
        let a = frac * s.reach();
        let y = s.tube_point(&x, &w, a).unwrap();
        let proj = s.nearest_point(&y).unwrap();
        prop_assert!((proj.distance - a).abs() < 1e-10);
        for i in 0..4 {
            prop_assert!((proj.point[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn frames_are_orthonormal(u in proptest::collection::vec(-1.0..1.0f64, 3)) {
        prop_assume!(u.iter().map(|v| v * v).sum::<f64>() > 1e-4);
        let s = Submanifold::round_sphere(dims(6, 2), 2.0).unwrap();
        let l = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x = [2.0 * u[0] / l, 2.0 * u[1] / l, 2.0 * u[2] / l, 0.0, 0.0, 0.0];
        let f = s.normal_frame(&x).unwrap();
        prop_assert!(f.orthonormality_defect() < 1e-13);
        prop_assert_eq!(f.tangents.len(), 2);
        prop_assert_eq!(f.normals.len(), 4);
    }
}
