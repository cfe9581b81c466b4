//! Gamma function and sphere areas.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function via the Lanczos approximation (g = 7, 9 terms), with
/// reflection for arguments below one half.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    // Exact for small integers and half-integers, which is where the
    // geometric constants live.
    if x <= 30.0 && (2.0 * x).fract() == 0.0 {
        return gamma_half_integer(x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

fn gamma_half_integer(x: f64) -> f64 {
    // Gamma(1) = 1, Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x).
    let (mut value, mut arg) = if x.fract() == 0.0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while arg < x {
        value *= arg;
        arg += 1.0;
    }
    value
}

/// Area of the unit sphere S^k ⊂ ℝ^{k+1}; `sphere_area(0) = 2` (two points).
pub fn sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(1.0), 1.0);
        assert_relative_eq!(gamma(5.0), 24.0);
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(gamma(2.5), 0.75 * PI.sqrt(), max_relative = 1e-15);
        // non half-integer path
        assert_relative_eq!(gamma(1.3), 0.897_470_696_306_277_2, max_relative = 1e-13);
        assert_relative_eq!(gamma(7.7), 2_769.830_362_327_315, max_relative = 1e-13);
        assert_relative_eq!(gamma(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn lanczos_matches_recurrence_off_grid() {
        for i in 1..40 {
            let x = 0.37 + 0.5 * i as f64;
            assert_relative_eq!(gamma(x + 1.0), x * gamma(x), max_relative = 1e-13);
        }
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(0), 2.0);
        assert_relative_eq!(sphere_area(1), 2.0 * PI);
        assert_relative_eq!(sphere_area(2), 4.0 * PI);
        assert_relative_eq!(sphere_area(3), 2.0 * PI * PI);
    }
}
