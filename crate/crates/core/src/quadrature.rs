//! Adaptive Gauss–Kronrod (G7/K15) integration of vector-valued integrands.

use crate::error::{Error, Result};

/// Kronrod abscissae on [-1, 1], non-negative half.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed Kronrod abscissae (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// A closed sub-interval of the integration range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
}

impl Panel {
    /// The 15 Kronrod nodes mapped to the panel, with their weights.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (self.lo + self.hi);
        let h = 0.5 * (self.hi - self.lo);
        (0..15).map(move |i| {
            let (x, w) = if i < 8 { (-XGK[i], WGK[i]) } else { (XGK[14 - i], WGK[14 - i]) };
            (c + h * x, h * w)
        })
    }
}

#[derive(Debug, Clone)]
struct Estimate<const N: usize> {
    panel: Panel,
    value: [f64; N],
    error: [f64; N],
}

fn kronrod<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, panel: Panel) -> Estimate<N> {
    let c = 0.5 * (panel.lo + panel.hi);
    let h = 0.5 * (panel.hi - panel.lo);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(c);
    for j in 0..N {
        k[j] = WGK[7] * fc[j];
        g[j] = WG[3] * fc[j];
    }
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for j in 0..N {
            let s = f1[j] + f2[j];
            k[j] += WGK[i] * s;
            if i % 2 == 1 {
                g[j] += WG[i / 2] * s;
            }
        }
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for j in 0..N {
        value[j] = h * k[j];
        error[j] = (h * (k[j] - g[j])).abs();
    }
    Estimate { panel, value, error }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub panels: Vec<Panel>,
}

/// Integrate `f` over the union of the intervals between consecutive
/// `breaks`, bisecting the worst panel until every component satisfies
/// `error <= max(rel_tol * |value|, abs_tol)`.
pub fn integrate<const N: usize, F>(
    mut f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Integral<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut parts: Vec<Estimate<N>> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&mut f, Panel { lo: w[0], hi: w[1] }))
        .collect();

    loop {
        let mut value = [0.0; N];
        let mut error = [0.0; N];
        for p in &parts {
            for j in 0..N {
                value[j] += p.value[j];
                error[j] += p.error[j];
            }
        }
        let target: Vec<f64> = value.iter().map(|v| (rel_tol * v.abs()).max(abs_tol)).collect();
        let done = (0..N).all(|j| error[j] <= target[j]);
        if done {
            let mut panels: Vec<Panel> = parts.iter().map(|p| p.panel).collect();
            panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            return Ok(Integral { value, error, panels });
        }
        if parts.len() >= max_panels {
            let worst = (0..N)
                .map(|j| error[j] / value[j].abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            return Err(Error::Accuracy { tolerance: rel_tol, achieved: worst });
        }
        // bisect the panel with the largest error relative to the component targets
        let (idx, _) = parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let score = (0..N).map(|j| p.error[j] / target[j]).fold(0.0, f64::max);
                (i, score)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        let panel = parts.swap_remove(idx).panel;
        let mid = 0.5 * (panel.lo + panel.hi);
        if mid <= panel.lo || mid >= panel.hi {
            let worst = (0..N).map(|j| error[j] / target[j] * rel_tol).fold(0.0, f64::max);
            return Err(Error::Accuracy { tolerance: rel_tol, achieved: worst });
        }
        parts.push(kronrod(&mut f, Panel { lo: panel.lo, hi: mid }));
        parts.push(kronrod(&mut f, Panel { lo: mid, hi: panel.hi }));
    }
}

/// Fixed 15-point Kronrod rule on a single interval.
pub fn kronrod_fixed<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> f64 {
    Panel { lo, hi }.nodes().map(|(x, w)| w * f(x)).sum()
}

/// Integral of `sin^p(t)` over `[lo, hi]`, composite Kronrod.
pub fn sin_power_integral(p: usize, lo: f64, hi: f64) -> f64 {
    match p {
        0 => hi - lo,
        1 => lo.cos() - hi.cos(),
        _ => {
            let pieces = 8;
            let h = (hi - lo) / pieces as f64;
            (0..pieces)
                .map(|i| {
                    let a = lo + i as f64 * h;
                    kronrod_fixed(|t| t.sin().powi(p as i32), a, a + h)
                })
                .sum()
        }
    }
}
