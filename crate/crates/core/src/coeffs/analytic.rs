//! Coefficients of `(window * u)_p` for analytic test distributions `u`.
//!
//! A distribution is placed on `R^d` at the image of its location nearest the
//! window center, so the localized object is exactly `window * u` with no
//! wraparound. Deltas have closed forms; every other kind is integrated with
//! composite Gauss-Legendre rules split at all non-smooth points and refined
//! by doubling the panel density until two successive levels agree.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::{breakpoints, exp_row, fourier_sums, gauss_legendre, Rule, ORDER};
use super::{CoeffArray, CoeffSource};
use crate::error::{Error, Result};
use crate::grid::{sample, wrap, CutoffWindow, Grid, SampledField};

/// Agreement required between successive quadrature levels.
pub const REFINEMENT_TOL: f64 = 1e-10;
const MAX_LEVEL: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistKind {
    /// Point mass at the location.
    Delta,
    /// Period-1 square wave: +1 on `[x0, x0 + 1/2)`, -1 on the other half.
    SquareWave1d,
    /// `|x - x0|`.
    Kink1d,
    /// Indicator of `{ normal . (x - x0) > 0 }`.
    HalfplaneEdge2d { normal: Vec<f64> },
    /// `exp(-|x - x0|^2 / (2 width^2))`.
    GaussianSmooth { width: f64 },
    /// `e^{2 pi i k.x}`; the location is unused.
    PlaneWave { wave: Vec<i64> },
    /// Surface measure of the line through `x0` with the given normal.
    LineDelta2d { normal: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDistribution {
    #[serde(flatten)]
    pub kind: DistKind,
    pub location: Vec<f64>,
    /// Optional modulation `e_m * u`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<Vec<i64>>,
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Distribution("direction must be a nonzero finite vector".into()));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

impl TestDistribution {
    pub fn delta(location: &[f64]) -> Self {
        TestDistribution { kind: DistKind::Delta, location: location.to_vec(), modulation: None }
    }

    pub fn square_wave(x0: f64) -> Self {
        TestDistribution { kind: DistKind::SquareWave1d, location: vec![x0], modulation: None }
    }

    pub fn kink(x0: f64) -> Self {
        TestDistribution { kind: DistKind::Kink1d, location: vec![x0], modulation: None }
    }

    pub fn halfplane_edge(point: [f64; 2], normal: [f64; 2]) -> Result<Self> {
        Ok(TestDistribution {
            kind: DistKind::HalfplaneEdge2d { normal: unit(&normal)? },
            location: point.to_vec(),
            modulation: None,
        })
    }

    pub fn gaussian(center: &[f64], width: f64) -> Self {
        TestDistribution {
            kind: DistKind::GaussianSmooth { width },
            location: center.to_vec(),
            modulation: None,
        }
    }

    pub fn plane_wave(wave: &[i64]) -> Self {
        TestDistribution {
            kind: DistKind::PlaneWave { wave: wave.to_vec() },
            location: vec![0.0; wave.len()],
            modulation: None,
        }
    }

    pub fn line_delta(point: [f64; 2], normal: [f64; 2]) -> Result<Self> {
        Ok(TestDistribution {
            kind: DistKind::LineDelta2d { normal: unit(&normal)? },
            location: point.to_vec(),
            modulation: None,
        })
    }

    pub fn modulated(mut self, m: &[i64]) -> Self {
        self.modulation = Some(m.to_vec());
        self
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DistKind::Delta => "delta",
            DistKind::SquareWave1d => "square_wave_1d",
            DistKind::Kink1d => "kink_1d",
            DistKind::HalfplaneEdge2d { .. } => "halfplane_edge_2d",
            DistKind::GaussianSmooth { .. } => "gaussian_smooth",
            DistKind::PlaneWave { .. } => "plane_wave",
            DistKind::LineDelta2d { .. } => "line_delta_2d",
        }
    }

    /// Checks dimensions and parameters.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if !(1..=3).contains(&d) {
            return Err(Error::Dimension(d));
        }
        if self.location.iter().any(|v| !v.is_finite()) {
            return Err(Error::Distribution("location must be finite".into()));
        }
        let need = |want: usize| {
            if d == want {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: want, got: d })
            }
        };
        match &self.kind {
            DistKind::SquareWave1d | DistKind::Kink1d => need(1)?,
            DistKind::HalfplaneEdge2d { normal } | DistKind::LineDelta2d { normal } => {
                need(2)?;
                if normal.len() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: normal.len() });
                }
                unit(normal)?;
            }
            DistKind::GaussianSmooth { width } => {
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(Error::Distribution(format!("width must be positive (got {width})")));
                }
            }
            DistKind::PlaneWave { wave } => need(wave.len())?,
            DistKind::Delta => {}
        }
        if let Some(m) = &self.modulation {
            need(m.len())?;
        }
        Ok(())
    }

    /// Whether the distribution is an ordinary function that can be sampled.
    pub fn is_function(&self) -> bool {
        !matches!(self.kind, DistKind::Delta | DistKind::LineDelta2d { .. })
    }

    /// Pointwise value of the 1-periodic version (offsets to the location are
    /// wrapped into `[-1/2, 1/2)`).
    pub fn value_at(&self, x: &[f64]) -> Result<Complex64> {
        let u: Vec<f64> = x.iter().zip(&self.location).map(|(a, b)| wrap(a - b)).collect();
        let base = match &self.kind {
            DistKind::Delta | DistKind::LineDelta2d { .. } => {
                return Err(Error::Distribution(format!(
                    "{} is not a function; use the analytic coefficient path",
                    self.name()
                )))
            }
            DistKind::SquareWave1d => {
                let t = (x[0] - self.location[0]).rem_euclid(1.0);
                if t < 0.5 { 1.0 } else { -1.0 }.into()
            }
            DistKind::Kink1d => u[0].abs().into(),
            DistKind::HalfplaneEdge2d { normal } => {
                let s = normal[0] * u[0] + normal[1] * u[1];
                if s > 0.0 {
                    1.0
                } else if s == 0.0 {
                    0.5
                } else {
                    0.0
                }
                .into()
            }
            DistKind::GaussianSmooth { width } => {
                let r2: f64 = u.iter().map(|v| v * v).sum();
                (-r2 / (2.0 * width * width)).exp().into()
            }
            DistKind::PlaneWave { wave } => plane(wave, x),
        };
        Ok(match &self.modulation {
            Some(m) => base * plane(m, x),
            None => base,
        })
    }

    /// Grid samples of the periodic version.
    pub fn sample(&self, grid: &Grid) -> Result<SampledField> {
        self.validate()?;
        if grid.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: self.dim() });
        }
        // probe once so non-function kinds fail with a clear message
        self.value_at(&vec![0.0; self.dim()])?;
        let f = sample(|x| self.value_at(x).unwrap_or_default(), grid)?;
        Ok(f.with_meta(self.name()))
    }
}

fn plane(k: &[i64], x: &[f64]) -> Complex64 {
    let phase: f64 = k.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
    Complex64::from_polar(1.0, 2.0 * PI * phase)
}

/// Panels per unit length at a refinement level.
fn density(n_max: usize, level: usize) -> f64 {
    (n_max as f64 / 2.0).max(16.0) * (1u64 << level) as f64
}

/// Coefficients of `(window * dist)_p` on the box `|n_j| <= n_max`.
pub fn analytic_coeffs(dist: &TestDistribution, window: &CutoffWindow, n_max: usize) -> Result<CoeffArray> {
    dist.validate()?;
    let d = dist.dim();
    if window.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: window.dim() });
    }
    if let Some(m) = &dist.modulation {
        let pad = m.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0);
        let inner = TestDistribution { modulation: None, ..dist.clone() };
        let base = analytic_coeffs(&inner, window, n_max + pad)?;
        return base.modulate(m)?.truncate(n_max);
    }
    let ctx = Ctx::new(dist, window);
    match &dist.kind {
        DistKind::Delta => {
            if window.in_support(&dist.location) && !window.in_plateau(&dist.location) {
                return Err(Error::Distribution(
                    "delta lies in the window transition; move it into the plateau".into(),
                ));
            }
            let amp = window.value(&dist.location);
            let p = ctx.image.clone();
            let out = CoeffArray::from_fn(d, n_max, |n| {
                let phase: f64 = n.iter().zip(&p).map(|(a, b)| *a as f64 * b).sum();
                Complex64::from_polar(amp, -2.0 * PI * phase)
            })?;
            Ok(out.with_source(CoeffSource::Analytic { level: None, nodes_per_unit: None, tolerance: None }))
        }
        DistKind::SquareWave1d => {
            let p = ctx.image[0];
            let jumps: Vec<f64> = (-2..=2).map(|k| p + 0.5 * k as f64).collect();
            refine(n_max, 1, |level| {
                Ok(ctx.axis_integral(0, &jumps, density(n_max, level), n_max, |x| {
                    let t = (x - p).rem_euclid(1.0);
                    if t < 0.5 { 1.0 } else { -1.0 }.into()
                }))
            })
        }
        DistKind::Kink1d => {
            let p = ctx.image[0];
            refine(n_max, 1, |level| {
                Ok(ctx.axis_integral(0, &[p], density(n_max, level), n_max, |x| (x - p).abs().into()))
            })
        }
        DistKind::GaussianSmooth { width } => {
            let w = *width;
            refine(n_max, d, |level| {
                let factors: Vec<Vec<Complex64>> = (0..d)
                    .map(|j| {
                        let p = ctx.image[j];
                        ctx.axis_integral(j, &[p], density(n_max, level), n_max, |x| {
                            (-(x - p) * (x - p) / (2.0 * w * w)).exp().into()
                        })
                    })
                    .collect();
                Ok(tensor(&factors, d, n_max))
            })
        }
        DistKind::PlaneWave { wave } => refine(n_max, d, |level| {
            let factors: Vec<Vec<Complex64>> = (0..d)
                .map(|j| {
                    let k = wave[j] as f64;
                    ctx.axis_integral(j, &[], density(n_max, level), n_max, |x| {
                        Complex64::from_polar(1.0, 2.0 * PI * k * x)
                    })
                })
                .collect();
            Ok(tensor(&factors, d, n_max))
        }),
        DistKind::HalfplaneEdge2d { normal } => {
            let nu = unit(normal)?;
            refine(n_max, 2, |level| Ok(ctx.halfplane(&nu, density(n_max, level), n_max)))
        }
        DistKind::LineDelta2d { normal } => {
            let nu = unit(normal)?;
            refine(n_max, 2, |level| Ok(ctx.line(&nu, density(n_max, level), n_max)))
        }
    }
}

fn refine<F>(n_max: usize, dim: usize, compute: F) -> Result<CoeffArray>
where
    F: Fn(usize) -> Result<Vec<Complex64>>,
{
    let mut prev = compute(0)?;
    let mut change = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        let cur = compute(level)?;
        change = cur.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if change < REFINEMENT_TOL {
            let out = CoeffArray::new(dim, n_max, cur, CoeffSource::Explicit)?;
            return Ok(out.with_source(CoeffSource::Analytic {
                level: Some(level),
                nodes_per_unit: Some((density(n_max, level) * ORDER as f64) as usize),
                tolerance: Some(REFINEMENT_TOL),
            }));
        }
        prev = cur;
    }
    Err(Error::NoConvergence { tol: REFINEMENT_TOL, levels: MAX_LEVEL, change })
}

fn tensor(factors: &[Vec<Complex64>], dim: usize, n_max: usize) -> Vec<Complex64> {
    let side = 2 * n_max + 1;
    (0..side.pow(dim as u32))
        .map(|flat| {
            let mut rest = flat;
            let mut v = Complex64::new(1.0, 0.0);
            for axis in (0..dim).rev() {
                v *= factors[axis][rest % side];
                rest /= side;
            }
            v
        })
        .collect()
}

/// `out[p][q] = sum_y u_y left[y][p] right[y][q]`, each row of length `side`.
/// For real integrands only rows `p >= side / 2` are computed; the rest follow
/// from `a_{-n} = conj(a_n)`.
fn outer_accumulate(u: &[Complex64], mut left: Vec<Complex64>, right: &[Complex64], side: usize, real: bool) -> Vec<Complex64> {
    for (row, uy) in left.chunks_mut(side).zip(u) {
        for v in row {
            *v *= uy;
        }
    }
    let ny = u.len();
    let first = if real { side / 2 } else { 0 };
    let rows = side - first;
    let mut out = vec![Complex64::default(); side * side];
    // SAFETY: Complex64 is repr(C) with layout [re, im]; the strides describe
    // A[p][y] = left[y * side + first + p], B[y][q] = right[y * side + q] and
    // C[p][q] = out[(first + p) * side + q], all in bounds.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            rows,
            ny,
            side,
            [1.0, 0.0],
            left.as_ptr().add(first) as *const [f64; 2],
            1,
            side as isize,
            right.as_ptr() as *const [f64; 2],
            side as isize,
            1,
            [0.0, 0.0],
            out.as_mut_ptr().add(first * side) as *mut [f64; 2],
            side as isize,
            1,
        );
    }
    if real {
        let last = side * side - 1;
        for i in 0..first * side {
            out[i] = out[last - i].conj();
        }
    }
    out
}

struct Ctx<'a> {
    window: &'a CutoffWindow,
    /// Location image nearest the window center.
    image: Vec<f64>,
}

impl<'a> Ctx<'a> {
    fn new(dist: &TestDistribution, window: &'a CutoffWindow) -> Self {
        let image = window
            .center()
            .iter()
            .zip(&dist.location)
            .map(|(c, p)| c + wrap(p - c))
            .collect();
        Ctx { window, image }
    }

    fn support(&self, axis: usize) -> (f64, f64) {
        let c = self.window.center()[axis];
        (c - self.window.eps_out(), c + self.window.eps_out())
    }

    fn smooth_breaks(&self, axis: usize) -> [f64; 2] {
        let c = self.window.center()[axis];
        [c - self.window.eps_in(), c + self.window.eps_in()]
    }

    fn profile(&self, axis: usize, x: f64) -> f64 {
        self.window.profile(x - self.window.center()[axis])
    }

    fn axis_rule(&self, axis: usize, extra: &[f64], density: f64) -> Rule {
        let (lo, hi) = self.support(axis);
        let mut cuts = self.smooth_breaks(axis).to_vec();
        cuts.extend_from_slice(extra);
        Rule::composite(&breakpoints(lo, hi, &cuts), density)
    }

    /// `int profile_axis(x) g(x) e^{-2 pi i n x} dx` over the window support.
    fn axis_integral<G>(&self, axis: usize, extra: &[f64], density: f64, n_max: usize, g: G) -> Vec<Complex64>
    where
        G: Fn(f64) -> Complex64,
    {
        let rule = self.axis_rule(axis, extra, density);
        let weights: Vec<Complex64> =
            rule.x.iter().zip(&rule.w).map(|(x, w)| g(*x) * (w * self.profile(axis, *x))).collect();
        fourier_sums(&rule.x, &weights, n_max)
    }

    fn halfplane(&self, nu: &[f64], density: f64, n_max: usize) -> Vec<Complex64> {
        let side = 2 * n_max + 1;
        // integrate the dominant normal component on the inner axis
        let (a, b) = if nu[0].abs() >= nu[1].abs() { (0, 1) } else { (1, 0) };
        let (lo, hi) = self.support(a);
        let inner = CumulativeAxis::new(self, a, density, n_max);
        let pa = self.image[a];
        let pb = self.image[b];
        let outer = self.axis_rule(b, &[], density);
        let ny = outer.x.len();
        let mut left = vec![Complex64::default(); ny * side];
        let mut right = vec![Complex64::default(); ny * side];
        let mut u = vec![Complex64::default(); ny];
        left.par_chunks_mut(side)
            .zip(right.par_chunks_mut(side))
            .zip(u.par_iter_mut())
            .enumerate()
            .for_each(|(i, ((g, e), uy))| {
                let y = outer.x[i];
                *uy = Complex64::new(outer.w[i] * self.profile(b, y), 0.0);
                let t = (pa - nu[b] * (y - pb) / nu[a]).clamp(lo, hi);
                let (from, to) = if nu[a] > 0.0 { (t, hi) } else { (lo, t) };
                inner.interval(from, to, g);
                exp_row(y, n_max, e);
            });
        let acc = outer_accumulate(&u, left, &right, side, true);
        if a == 0 {
            acc
        } else {
            transpose(&acc, side)
        }
    }

    fn line(&self, nu: &[f64], density: f64, n_max: usize) -> Vec<Complex64> {
        let side = 2 * n_max + 1;
        let tau = [-nu[1], nu[0]];
        let p = &self.image;
        let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut cuts = Vec::new();
        for j in 0..2 {
            let (lo, hi) = self.support(j);
            if tau[j].abs() < 1e-15 {
                if p[j] <= lo || p[j] >= hi {
                    return vec![Complex64::default(); side * side];
                }
                continue;
            }
            let (s1, s2) = ((lo - p[j]) / tau[j], (hi - p[j]) / tau[j]);
            t_lo = t_lo.max(s1.min(s2));
            t_hi = t_hi.min(s1.max(s2));
            for c in self.smooth_breaks(j) {
                cuts.push((c - p[j]) / tau[j]);
            }
        }
        if t_hi <= t_lo {
            return vec![Complex64::default(); side * side];
        }
        let rule = Rule::composite(&breakpoints(t_lo, t_hi, &cuts), density);
        let nt = rule.x.len();
        let mut left = vec![Complex64::default(); nt * side];
        let mut right = vec![Complex64::default(); nt * side];
        let mut u = vec![Complex64::default(); nt];
        left.par_chunks_mut(side)
            .zip(right.par_chunks_mut(side))
            .zip(u.par_iter_mut())
            .enumerate()
            .for_each(|(i, ((l, r), ui))| {
                let t = rule.x[i];
                let x0 = p[0] + t * tau[0];
                let x1 = p[1] + t * tau[1];
                *ui = Complex64::new(rule.w[i] * self.profile(0, x0) * self.profile(1, x1), 0.0);
                exp_row(x0, n_max, l);
                exp_row(x1, n_max, r);
            });
        outer_accumulate(&u, left, &right, side, true)
    }
}

fn transpose(a: &[Complex64], side: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); a.len()];
    for i in 0..side {
        for j in 0..side {
            out[j * side + i] = a[i * side + j];
        }
    }
    out
}

/// Cumulative panel integrals of `profile_axis(x) e^{-2 pi i n x}` so that
/// any sub-interval costs two partial panels.
struct CumulativeAxis<'c, 'a> {
    ctx: &'c Ctx<'a>,
    axis: usize,
    n_max: usize,
    edges: Vec<f64>,
    /// `prefix[p]` = integral from the first edge to `edges[p]`.
    prefix: Vec<Vec<Complex64>>,
    gx: Vec<f64>,
    gw: Vec<f64>,
}

impl<'c, 'a> CumulativeAxis<'c, 'a> {
    fn new(ctx: &'c Ctx<'a>, axis: usize, density: f64, n_max: usize) -> Self {
        let (lo, hi) = ctx.support(axis);
        let cuts = breakpoints(lo, hi, &ctx.smooth_breaks(axis));
        let mut edges = vec![cuts[0]];
        for pair in cuts.windows(2) {
            let panels = ((pair[1] - pair[0]) * density).ceil().max(1.0) as usize;
            let h = (pair[1] - pair[0]) / panels as f64;
            for k in 1..=panels {
                edges.push(if k == panels { pair[1] } else { pair[0] + k as f64 * h });
            }
        }
        let (gx, gw) = gauss_legendre(ORDER);
        let side = 2 * n_max + 1;
        let panel_integrals: Vec<Vec<Complex64>> = edges
            .par_windows(2)
            .map(|e| {
                let r = Rule::single(e[0], e[1], &gx, &gw);
                let g: Vec<Complex64> =
                    r.x.iter().zip(&r.w).map(|(x, w)| Complex64::new(w * ctx.profile(axis, *x), 0.0)).collect();
                fourier_sums(&r.x, &g, n_max)
            })
            .collect();
        let mut prefix = Vec::with_capacity(edges.len());
        let mut run = vec![Complex64::default(); side];
        prefix.push(run.clone());
        for p in &panel_integrals {
            for (r, v) in run.iter_mut().zip(p) {
                *r += v;
            }
            prefix.push(run.clone());
        }
        CumulativeAxis { ctx, axis, n_max, edges, prefix, gx, gw }
    }

    /// Integral from the first edge to `t`.
    fn upto(&self, t: f64, out: &mut [Complex64]) {
        let last = self.edges.len() - 1;
        let p = match self.edges.binary_search_by(|e| e.partial_cmp(&t).unwrap()) {
            Ok(i) => {
                out.copy_from_slice(&self.prefix[i]);
                return;
            }
            Err(0) => {
                out.iter_mut().for_each(|v| *v = Complex64::default());
                return;
            }
            Err(i) if i > last => {
                out.copy_from_slice(&self.prefix[last]);
                return;
            }
            Err(i) => i - 1,
        };
        out.copy_from_slice(&self.prefix[p]);
        let r = Rule::single(self.edges[p], t, &self.gx, &self.gw);
        let mut row = vec![Complex64::default(); out.len()];
        for (x, w) in r.x.iter().zip(&r.w) {
            let c = w * self.ctx.profile(self.axis, *x);
            if c == 0.0 {
                continue;
            }
            exp_row(*x, self.n_max, &mut row);
            for (o, e) in out.iter_mut().zip(&row) {
                *o += e * c;
            }
        }
    }

    fn interval(&self, from: f64, to: f64, out: &mut [Complex64]) {
        let mut lower = vec![Complex64::default(); out.len()];
        self.upto(to, out);
        self.upto(from, &mut lower);
        for (o, l) in out.iter_mut().zip(&lower) {
            *o -= l;
        }
    }
}
