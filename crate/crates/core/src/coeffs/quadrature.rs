//! Composite Gauss-Legendre rules and batched Fourier sums over their nodes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

pub(crate) const ORDER: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on `P_q`).
pub(crate) fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    (nodes, weights)
}

/// Nodes and weights of a composite rule.
#[derive(Debug, Clone, Default)]
pub(crate) struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Rule {
    /// Composite rule on consecutive intervals of `breaks` with about
    /// `density` panels per unit length (at least one panel per interval).
    pub fn composite(breaks: &[f64], density: f64) -> Rule {
        let (gx, gw) = gauss_legendre(ORDER);
        let mut rule = Rule::default();
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let panels = ((b - a) * density).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * h;
                for (t, w) in gx.iter().zip(&gw) {
                    rule.x.push(lo + 0.5 * h * (t + 1.0));
                    rule.w.push(0.5 * h * w);
                }
            }
        }
        rule
    }

    /// Gauss-Legendre on a single interval.
    pub fn single(a: f64, b: f64, gx: &[f64], gw: &[f64]) -> Rule {
        let h = b - a;
        Rule {
            x: gx.iter().map(|t| a + 0.5 * h * (t + 1.0)).collect(),
            w: gw.iter().map(|w| 0.5 * h * w).collect(),
        }
    }
}

/// Sorted, deduplicated breakpoints clipped to `[lo, hi]`, including the ends.
pub(crate) fn breakpoints(lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = std::iter::once(lo)
        .chain(extra.iter().copied().filter(|t| *t > lo && *t < hi))
        .chain(std::iter::once(hi))
        .collect();
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|a, c| (*a - *c).abs() < 1e-14);
    b
}

/// `e^{-2 pi i n x}` for `n = -n_max..=n_max`, written into `out`.
#[inline]
pub(crate) fn exp_row(x: f64, n_max: usize, out: &mut [Complex64]) {
    let step = Complex64::from_polar(1.0, -2.0 * PI * x);
    let mut cur = Complex64::from_polar(1.0, 2.0 * PI * n_max as f64 * x);
    for (j, slot) in out.iter_mut().enumerate() {
        if j % 32 == 0 {
            let n = j as f64 - n_max as f64;
            cur = Complex64::from_polar(1.0, -2.0 * PI * n * x);
        }
        *slot = cur;
        cur *= step;
    }
}

/// `sum_i g_i e^{-2 pi i n x_i}` for `n = -n_max..=n_max`.
pub(crate) fn fourier_sums(x: &[f64], g: &[Complex64], n_max: usize) -> Vec<Complex64> {
    let side = 2 * n_max + 1;
    let chunk = 256;
    let partials: Vec<Vec<Complex64>> = x
        .par_chunks(chunk)
        .zip(g.par_chunks(chunk))
        .map(|(xs, gs)| {
            let mut acc = vec![Complex64::default(); side];
            let mut row = vec![Complex64::default(); side];
            for (xi, gi) in xs.iter().zip(gs) {
                if gi.re == 0.0 && gi.im == 0.0 {
                    continue;
                }
                exp_row(*xi, n_max, &mut row);
                for (a, e) in acc.iter_mut().zip(&row) {
                    *a += gi * e;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![Complex64::default(); side];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}
