//! Wave front and Sobolev wave front detection at a point from the Fourier
//! coefficients of a localized periodization.
//!
//! Coefficients are grouped on dyadic shells `2^k <= |n| < 2^{k+1}` inside a
//! cone. The decay order is the negated slope of a least-squares fit of the
//! per-shell maximum against `log 2^k`; the critical Sobolev order comes from
//! the geometric rate of per-shell energy. Shells at the numerical noise floor
//! carry no information about decay and end the fit; the floor then yields a
//! lower bound on the decay instead.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoeffArray, CoeffSource, Input};
use crate::cones::{angle_between, default_directions, default_half_angle_deg, Cone};
use crate::error::{Error, Result};
use crate::grid::CutoffWindow;

pub const SCHEMA_VERSION: u32 = 1;

/// Coefficients below this fraction of the largest one are treated as noise.
pub const FLOOR_REL: f64 = 1e-11;
/// Sobolev fits with an RMS residual above this (log2 units) are inconclusive.
pub const MAX_SOBOLEV_RESIDUAL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub k: usize,
    /// Cone lattice points in the shell.
    pub points: usize,
    /// Envelope `max |a_n|` or energy `sum |a_n|^2`.
    pub value: f64,
}

/// Least-squares line through `(x, y)`: slope, intercept, RMS residual.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Fit of `log2 value_k` against `k` over the shells above `floor(shell)`.
struct ShellFit {
    /// Slope in log2 units per shell; NaN when fewer than two shells are
    /// above the floor.
    slope: f64,
    intercept: f64,
    residual: f64,
    fitted: usize,
    floor_limited: bool,
    /// Steepest per-shell drop implied by reaching the floor (log2 units,
    /// negative), if the floor was reached.
    floor_slope: Option<f64>,
}

fn fit_shells(shells: &[Shell], floor: impl Fn(&Shell) -> f64) -> ShellFit {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut first_below: Option<&Shell> = None;
    for s in shells.iter().filter(|s| s.points > 0) {
        if s.value <= floor(s) {
            first_below = Some(s);
            break;
        }
        xs.push(s.k as f64);
        ys.push(s.value.log2());
    }
    let (slope, intercept, residual) =
        if xs.len() >= 2 { fit_line(&xs, &ys) } else { (f64::NAN, f64::NAN, f64::NAN) };
    let floor_slope = first_below.and_then(|b| {
        let fb = floor(b).log2();
        xs.iter()
            .zip(&ys)
            .map(|(k, y)| (fb - y) / (b.k as f64 - k))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    });
    ShellFit { slope, intercept, residual, fitted: xs.len(), floor_limited: first_below.is_some(), floor_slope }
}

/// Lattice points of a coefficient box grouped by dyadic shell, with unit
/// directions, for repeated cone queries.
pub struct ShellIndex {
    dim: usize,
    k_min: usize,
    k_max: usize,
    /// `(flat index, shell, unit direction)`; sorted by polar angle in 2-D.
    points: Vec<(usize, usize, [f64; 3])>,
    /// Polar angles in `[-pi, pi]` matching `points` (2-D only).
    angles: Vec<f64>,
}

impl ShellIndex {
    pub fn new(coeffs: &CoeffArray, k_min: usize, k_max: usize) -> Result<Self> {
        if k_min > k_max {
            return Err(Error::Parameter(format!("shell range {k_min}..{k_max} is empty")));
        }
        let needed = 1usize << (k_max + 1);
        if needed > coeffs.n_max() {
            return Err(Error::Starvation { required: needed, available: coeffs.n_max() });
        }
        let d = coeffs.dim();
        let (lo, hi) = ((1u64 << k_min) as f64, (1u64 << (k_max + 1)) as f64);
        let points = (0..coeffs.len())
            .filter_map(|flat| {
                let n = coeffs.index_of(flat);
                let r = n[..d].iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
                if r < lo || r >= hi {
                    return None;
                }
                let k = (r.log2().floor() as usize).clamp(k_min, k_max);
                // guard the floor against rounding at exact powers of two
                let k = if ((1u64 << k) as f64) > r { k - 1 } else { k };
                let k = if ((1u64 << (k + 1)) as f64) <= r { k + 1 } else { k };
                let mut u = [0.0; 3];
                for j in 0..d {
                    u[j] = n[j] as f64 / r;
                }
                Some((flat, k, u))
            })
            .collect::<Vec<_>>();
        let mut points = points;
        let mut angles = Vec::new();
        if d == 2 {
            let mut keyed: Vec<_> = points.into_iter().map(|p| (p.2[1].atan2(p.2[0]), p)).collect();
            keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1 .0.cmp(&b.1 .0)));
            (angles, points) = keyed.into_iter().unzip();
        }
        Ok(ShellIndex { dim: d, k_min, k_max, points, angles })
    }

    /// Points that may lie in `cone`: in 2-D the polar-angle window around the
    /// axis (with margin), otherwise everything.
    fn candidates<'s>(&'s self, cone: &Cone) -> Box<dyn Iterator<Item = &'s (usize, usize, [f64; 3])> + 's> {
        if self.dim != 2 || cone.half_angle() >= PI / 2.0 {
            return Box::new(self.points.iter());
        }
        let a = cone.axis()[1].atan2(cone.axis()[0]);
        let h = cone.half_angle() + 1e-6;
        let range = |lo: f64, hi: f64| {
            let i = self.angles.partition_point(|v| *v < lo);
            let j = self.angles.partition_point(|v| *v <= hi);
            &self.points[i..j]
        };
        let (lo, hi) = (a - h, a + h);
        if lo < -PI {
            Box::new(range(lo + 2.0 * PI, PI).iter().chain(range(-PI, hi)))
        } else if hi > PI {
            Box::new(range(lo, PI).iter().chain(range(-PI, hi - 2.0 * PI)))
        } else {
            Box::new(range(lo, hi).iter())
        }
    }

    /// Per-shell point counts, max `|a_n|` and `sum |a_n|^2` inside `cone`.
    fn shells(&self, coeffs: &CoeffArray, cone: &Cone) -> (Vec<Shell>, Vec<Shell>) {
        let count = self.k_max - self.k_min + 1;
        let mut env: Vec<Shell> =
            (0..count).map(|i| Shell { k: self.k_min + i, points: 0, value: 0.0 }).collect();
        let mut energy = env.clone();
        let cos_t = cone.half_angle().cos();
        let axis = cone.axis();
        let vals = coeffs.values();
        for (flat, k, u) in self.candidates(cone) {
            let dot: f64 = (0..self.dim).map(|j| u[j] * axis[j]).sum();
            // cheap reject and accept, then the exact angle test at the boundary
            if dot < cos_t - 1e-9 {
                continue;
            }
            if dot <= cos_t + 1e-9 && angle_between(&u[..self.dim], axis) >= cone.half_angle() {
                continue;
            }
            let a = vals[*flat].norm();
            let i = k - self.k_min;
            env[i].points += 1;
            energy[i].points += 1;
            env[i].value = env[i].value.max(a);
            energy[i].value += a * a;
        }
        (env, energy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub cone: Cone,
    pub k_min: usize,
    pub k_max: usize,
    /// Per-shell envelope `m_k = max |a_n|`.
    pub shells: Vec<Shell>,
    pub empty_shells: usize,
    /// Shells used in the regression.
    pub fitted_shells: usize,
    /// Slope of `ln m_k` against `ln 2^k` (null when under two shells).
    pub slope: f64,
    /// Intercept, an estimate of `ln C`.
    pub intercept: f64,
    /// RMS fit residual in log2 units.
    pub residual: f64,
    /// Estimated decay order `t >= 0`; infinite (null) when the envelope is
    /// entirely below the noise floor.
    pub order: f64,
    pub floor: f64,
    /// The envelope reached the noise floor inside the shell range.
    pub floor_limited: bool,
}

fn decay_from_shells(cone: &Cone, k_min: usize, k_max: usize, shells: Vec<Shell>, floor: f64) -> Result<DecayEstimate> {
    let nonempty = shells.iter().filter(|s| s.points > 0).count();
    if nonempty < 3 {
        return Err(Error::TooFewShells { found: nonempty });
    }
    let fit = fit_shells(&shells, |_| floor);
    let mut order = if fit.fitted >= 2 { (-fit.slope).max(0.0) } else { f64::INFINITY };
    if let Some(fs) = fit.floor_slope {
        order = order.max(-fs).max(0.0);
        if fit.fitted == 0 {
            order = f64::INFINITY;
        }
    }
    Ok(DecayEstimate {
        cone: cone.clone(),
        k_min,
        k_max,
        empty_shells: shells.len() - nonempty,
        fitted_shells: fit.fitted,
        slope: fit.slope,
        intercept: fit.intercept * std::f64::consts::LN_2,
        residual: fit.residual,
        order,
        floor,
        floor_limited: fit.floor_limited,
        shells,
    })
}

/// Decay order of the coefficients on `cone` over shells `k_min..=k_max`.
pub fn directional_decay(coeffs: &CoeffArray, cone: &Cone, k_min: usize, k_max: usize) -> Result<DecayEstimate> {
    check_cone(coeffs, cone)?;
    let index = ShellIndex::new(coeffs, k_min, k_max)?;
    let floor = FLOOR_REL * coeffs.max_abs();
    let (env, _) = index.shells(coeffs, cone);
    decay_from_shells(cone, k_min, k_max, env, floor)
}

fn check_cone(coeffs: &CoeffArray, cone: &Cone) -> Result<()> {
    if cone.dim() != coeffs.dim() {
        return Err(Error::DimensionMismatch { expected: coeffs.dim(), got: cone.dim() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    Singular,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    pub cone: Cone,
    pub k_min: usize,
    pub k_max: usize,
    /// Per-shell energy `sigma_k = sum |a_n|^2`.
    pub shells: Vec<Shell>,
    pub empty_shells: usize,
    pub fitted_shells: usize,
    /// Geometric rate: `sigma_k ~ 2^{beta k}`.
    pub beta: f64,
    /// RMS residual of the `log2 sigma_k` fit.
    pub residual: f64,
    /// Critical order `-beta / 2`; infinite (null) when all shells are at the
    /// noise floor.
    pub critical_order: f64,
    /// Critical orders from consecutive pairs of fitted shells.
    pub local_orders: Vec<f64>,
    pub floor_limited: bool,
    /// The fit is too poor to support a verdict.
    pub poor_fit: bool,
}

impl SobolevEstimate {
    /// `(x0, axis)` is in `WF_s` iff `s >= s*`; within `band` of `s*` no
    /// verdict is given. On a poor fit `s` must clear every local order.
    pub fn verdict(&self, s: f64, band: f64) -> Verdict {
        if self.poor_fit {
            let lo = self.local_orders.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = self.local_orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if s < lo - band {
                Verdict::Regular
            } else if s > hi + band {
                Verdict::Singular
            } else {
                Verdict::Inconclusive
            }
        } else if s > self.critical_order + band {
            Verdict::Singular
        } else if s < self.critical_order - band {
            Verdict::Regular
        } else {
            Verdict::Inconclusive
        }
    }
}

fn sobolev_from_shells(cone: &Cone, k_min: usize, k_max: usize, shells: Vec<Shell>, floor: f64) -> Result<SobolevEstimate> {
    let nonempty = shells.iter().filter(|s| s.points > 0).count();
    if nonempty < 3 {
        return Err(Error::TooFewShells { found: nonempty });
    }
    let fit = fit_shells(&shells, |s| floor * floor * s.points as f64);
    let mut beta = fit.slope;
    let mut s_star = if fit.fitted >= 2 { -beta / 2.0 } else { f64::INFINITY };
    if let Some(fs) = fit.floor_slope {
        if fit.fitted == 0 {
            s_star = f64::INFINITY;
        } else if -fs / 2.0 > s_star {
            s_star = -fs / 2.0;
            beta = fs;
        }
    }
    let poor_fit = fit.fitted >= 3 && fit.residual > MAX_SOBOLEV_RESIDUAL;
    let fitted: Vec<&Shell> = shells.iter().filter(|s| s.points > 0).take(fit.fitted).collect();
    let local_orders = fitted
        .windows(2)
        .map(|w| -(w[1].value.log2() - w[0].value.log2()) / (2.0 * (w[1].k - w[0].k) as f64))
        .collect();
    Ok(SobolevEstimate {
        cone: cone.clone(),
        k_min,
        k_max,
        empty_shells: shells.len() - nonempty,
        fitted_shells: fit.fitted,
        beta,
        residual: fit.residual,
        critical_order: s_star,
        local_orders,
        floor_limited: fit.floor_limited,
        poor_fit,
        shells,
    })
}

/// Critical Sobolev order of the coefficients on `cone`.
pub fn sobolev_order(coeffs: &CoeffArray, cone: &Cone, k_min: usize, k_max: usize) -> Result<SobolevEstimate> {
    check_cone(coeffs, cone)?;
    let index = ShellIndex::new(coeffs, k_min, k_max)?;
    let floor = FLOOR_REL * coeffs.max_abs();
    let (_, energy) = index.shells(coeffs, cone);
    sobolev_from_shells(cone, k_min, k_max, energy, floor)
}

/// Parameters shared by both scan kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub n_max: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub half_angle_deg: f64,
    /// Unit cone axes.
    pub directions: Vec<Vec<f64>>,
}

pub const DEFAULT_THRESHOLD: f64 = 3.0;
pub const DEFAULT_BAND: f64 = 0.05;

impl ScanParams {
    /// Default grid and half-angle for `dim`; the top three shells that fit
    /// in the box, `log2(n_max) - 3 ..= log2(n_max) - 1`.
    pub fn new(dim: usize, n_max: usize) -> Result<Self> {
        if n_max < 16 {
            return Err(Error::Parameter(format!("N_max {n_max} is too small for dyadic shells")));
        }
        let k_max = (usize::BITS - 1 - n_max.leading_zeros()) as usize - 1;
        Ok(ScanParams {
            n_max,
            k_min: k_max - 2,
            k_max,
            half_angle_deg: default_half_angle_deg(dim),
            directions: default_directions(dim)?,
        })
    }

    pub fn with_shells(mut self, k_min: usize, k_max: usize) -> Self {
        self.k_min = k_min;
        self.k_max = k_max;
        self
    }

    pub fn with_half_angle(mut self, deg: f64) -> Self {
        self.half_angle_deg = deg;
        self
    }

    pub fn with_directions(mut self, directions: Vec<Vec<f64>>) -> Self {
        self.directions = directions;
        self
    }

    fn cones(&self, dim: usize) -> Result<Vec<Cone>> {
        if self.directions.is_empty() {
            return Err(Error::Parameter("direction grid is empty".into()));
        }
        self.directions
            .iter()
            .map(|a| {
                if a.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: a.len() });
                }
                Cone::from_degrees(a, self.half_angle_deg)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScanMode {
    /// Singular iff the decay order is below `threshold`.
    Decay { threshold: f64 },
    /// Singular for `WF_s` iff `order >= s*`, with an inconclusive band.
    Sobolev { order: f64, band: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub index: usize,
    /// Polar angle in degrees (2-D only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<SobolevEstimate>,
    /// Verdict for the cone around this direction alone.
    pub cone_verdict: Verdict,
    /// Verdict for the direction: regular when some scanned cone containing
    /// it is regular, singular when every such cone is singular.
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    pub input: String,
    pub n_max: usize,
    /// Samples per axis for field inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub shells: [usize; 2],
    pub source: CoeffSource,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefrontReport {
    pub schema_version: u32,
    pub x0: Vec<f64>,
    pub window: CutoffWindow,
    pub mode: ScanMode,
    pub params: ScanParams,
    pub directions: Vec<DirectionResult>,
    pub singular_directions: Vec<usize>,
    pub inconclusive_directions: Vec<usize>,
    pub meta: ScanMeta,
}

impl WavefrontReport {
    pub fn singular_axes(&self) -> Vec<&[f64]> {
        self.singular_directions.iter().map(|i| self.params.directions[*i].as_slice()).collect()
    }

    pub fn has_inconclusive(&self) -> bool {
        !self.inconclusive_directions.is_empty()
    }
}

/// Combines per-cone verdicts into per-direction verdicts.
fn direction_verdicts(cones: &[Cone], cone_verdicts: &[Verdict]) -> Vec<Verdict> {
    cones
        .iter()
        .map(|c| {
            let covering: Vec<Verdict> = cones
                .iter()
                .zip(cone_verdicts)
                // neighbours exactly one half-angle away do not count
                .filter(|(o, _)| angle_between(o.axis(), c.axis()) < o.half_angle() - 1e-9)
                .map(|(_, v)| *v)
                .collect();
            if covering.contains(&Verdict::Regular) {
                Verdict::Regular
            } else if covering.iter().all(|v| *v == Verdict::Singular) {
                Verdict::Singular
            } else {
                Verdict::Inconclusive
            }
        })
        .collect()
}

fn input_name(input: &Input) -> String {
    match input {
        Input::Field(f) => f.meta().unwrap_or("field").to_string(),
        Input::Analytic(t) => t.name().to_string(),
    }
}

/// Runs a scan on precomputed coefficients of `(window f)_p`.
pub fn scan_coefficients(
    coeffs: &CoeffArray,
    x0: &[f64],
    window: &CutoffWindow,
    params: &ScanParams,
    mode: &ScanMode,
    input: &str,
) -> Result<WavefrontReport> {
    let d = coeffs.dim();
    match mode {
        ScanMode::Decay { threshold } if !threshold.is_finite() || *threshold < 0.0 => {
            return Err(Error::Parameter(format!("threshold {threshold} must be finite and nonnegative")))
        }
        ScanMode::Sobolev { order, band } if !order.is_finite() || band.is_nan() || *band < 0.0 => {
            return Err(Error::Parameter(format!("order {order} and band {band} must be finite")))
        }
        _ => {}
    }
    let cones = params.cones(d)?;
    let index = ShellIndex::new(coeffs, params.k_min, params.k_max)?;
    let floor = FLOOR_REL * coeffs.max_abs();
    let per_cone: Vec<(Option<DecayEstimate>, Option<SobolevEstimate>, Verdict)> = cones
        .par_iter()
        .map(|cone| {
            let (env, energy) = index.shells(coeffs, cone);
            Ok(match mode {
                ScanMode::Decay { threshold } => {
                    let est = decay_from_shells(cone, params.k_min, params.k_max, env, floor)?;
                    let v = if est.order < *threshold { Verdict::Singular } else { Verdict::Regular };
                    (Some(est), None, v)
                }
                ScanMode::Sobolev { order, band } => {
                    let est = sobolev_from_shells(cone, params.k_min, params.k_max, energy, floor)?;
                    let v = est.verdict(*order, *band);
                    (None, Some(est), v)
                }
            })
        })
        .collect::<Result<_>>()?;
    let cone_verdicts: Vec<Verdict> = per_cone.iter().map(|p| p.2).collect();
    let verdicts = direction_verdicts(&cones, &cone_verdicts);
    let directions: Vec<DirectionResult> = per_cone
        .into_iter()
        .zip(&verdicts)
        .enumerate()
        .map(|(index, ((decay, sobolev, cone_verdict), verdict))| DirectionResult {
            index,
            angle_deg: (d == 2).then(|| {
                let a = &params.directions[index];
                a[1].atan2(a[0]).to_degrees().rem_euclid(360.0)
            }),
            decay,
            sobolev,
            cone_verdict,
            verdict: *verdict,
        })
        .collect();
    let pick = |want: Verdict| directions.iter().filter(|r| r.verdict == want).map(|r| r.index).collect();
    Ok(WavefrontReport {
        schema_version: SCHEMA_VERSION,
        x0: x0.to_vec(),
        window: window.clone(),
        mode: mode.clone(),
        params: params.clone(),
        singular_directions: pick(Verdict::Singular),
        inconclusive_directions: pick(Verdict::Inconclusive),
        directions,
        meta: ScanMeta {
            input: input.to_string(),
            n_max: coeffs.n_max(),
            m: match coeffs.source() {
                CoeffSource::Field { m } => Some(*m),
                _ => None,
            },
            shells: [params.k_min, params.k_max],
            source: coeffs.source().clone(),
            floor,
        },
    })
}

fn scan(input: &Input, x0: &[f64], window: &CutoffWindow, params: &ScanParams, mode: &ScanMode) -> Result<WavefrontReport> {
    if x0.len() != input.dim() {
        return Err(Error::DimensionMismatch { expected: input.dim(), got: x0.len() });
    }
    let window = window.recentered(x0)?;
    let coeffs = input.localized(&window, params.n_max)?;
    scan_coefficients(&coeffs, x0, &window, params, mode, &input_name(input))
}

/// Discretized fiber of `WF(f)` over `x0`: directions whose cone decay order
/// falls below `threshold`. The window is recentered at `x0`.
pub fn wavefront_scan(
    input: &Input,
    x0: &[f64],
    window: &CutoffWindow,
    params: &ScanParams,
    threshold: f64,
) -> Result<WavefrontReport> {
    scan(input, x0, window, params, &ScanMode::Decay { threshold })
}

/// Discretized fiber of `WF_s(f)` over `x0`.
pub fn sobolev_wavefront_scan(
    input: &Input,
    x0: &[f64],
    window: &CutoffWindow,
    params: &ScanParams,
    order: f64,
) -> Result<WavefrontReport> {
    scan(input, x0, window, params, &ScanMode::Sobolev { order, band: DEFAULT_BAND })
}

/// Outcome of one point of a batch scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointScan {
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<WavefrontReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Independent scans at each point, in input order. Failures are recorded per
/// point and do not stop the batch.
pub fn full_wf_map(
    input: &Input,
    points: &[Vec<f64>],
    window: &CutoffWindow,
    params: &ScanParams,
    mode: &ScanMode,
) -> Vec<PointScan> {
    points
        .par_iter()
        .map(|x0| match scan(input, x0, window, params, mode) {
            Ok(r) => PointScan { x0: x0.clone(), report: Some(r), error: None },
            Err(e) => PointScan { x0: x0.clone(), report: None, error: Some(e.to_string()) },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::japanese;

    fn power_law(dim: usize, n_max: usize, t: f64) -> CoeffArray {
        CoeffArray::from_fn(dim, n_max, |n| japanese(n).powf(-t).into()).unwrap()
    }

    #[test]
    fn angular_candidates_match_a_full_pass() {
        let c = CoeffArray::from_fn(2, 64, |n| (1.0 + (n[0] * 7 + n[1] * 3).rem_euclid(11) as f64).into()).unwrap();
        let index = ShellIndex::new(&c, 3, 5).unwrap();
        let brute = |cone: &Cone| {
            let mut counts = [0usize; 3];
            let mut sums = [0.0; 3];
            for (flat, k, u) in &index.points {
                if angle_between(&u[..2], cone.axis()) < cone.half_angle() {
                    counts[k - 3] += 1;
                    sums[k - 3] += c.values()[*flat].norm_sqr();
                }
            }
            (counts, sums)
        };
        // axes on and across the +-pi seam, and on lattice diagonals
        for deg in [0.0, 45.0, 90.0, 177.0, 180.0, 183.0, 225.0, 359.0, 12.3] {
            for half in [5.0, 10.0, 30.0] {
                let a = f64::to_radians(deg);
                let cone = Cone::from_degrees(&[a.cos(), a.sin()], half).unwrap();
                let (_, energy) = index.shells(&c, &cone);
                let (counts, sums) = brute(&cone);
                for (i, e) in energy.iter().enumerate() {
                    assert_eq!(e.points, counts[i], "{deg} {half}");
                    assert!((e.value - sums[i]).abs() < 1e-9 * sums[i].max(1.0));
                }
            }
        }
    }

    #[test]
    fn constant_and_power_law_orders() {
        let cone = Cone::from_degrees(&[1.0, 0.0], 10.0).unwrap();
        let flat = directional_decay(&power_law(2, 64, 0.0), &cone, 3, 5).unwrap();
        assert!(flat.order.abs() < 0.05);
        let two = directional_decay(&power_law(2, 64, 2.0), &cone, 3, 5).unwrap();
        assert!((two.order - 2.0).abs() < 0.05, "{}", two.order);
    }

    #[test]
    fn sobolev_shell_arithmetic() {
        let plus = Cone::from_degrees(&[1.0], 45.0).unwrap();
        let est = sobolev_order(&power_law(1, 256, 1.0), &plus, 3, 7).unwrap();
        assert!((est.critical_order - 0.5).abs() < 0.05);
        assert!((est.beta + 1.0).abs() < 0.1);
        let delta = sobolev_order(&power_law(1, 256, 0.0), &plus, 3, 7).unwrap();
        assert!((delta.critical_order + 0.5).abs() < 0.05);
        assert_eq!(delta.verdict(0.0, 0.1), Verdict::Singular);
        assert_eq!(delta.verdict(-1.0, 0.1), Verdict::Regular);
        assert_eq!(delta.verdict(-0.45, 0.1), Verdict::Inconclusive);
    }

    #[test]
    fn zero_coefficients_decay_infinitely() {
        let mut a = power_law(1, 64, 0.0);
        for (i, v) in a.values_mut().iter_mut().enumerate() {
            if i != 64 {
                *v = 0.0.into();
            }
        }
        let plus = Cone::from_degrees(&[1.0], 45.0).unwrap();
        let est = directional_decay(&a, &plus, 3, 5).unwrap();
        assert!(est.order.is_infinite());
        assert!(est.floor_limited);
    }

    #[test]
    fn too_few_shells_is_an_error() {
        let c = Cone::from_degrees(&[1.0], 45.0).unwrap();
        let r = directional_decay(&power_law(1, 64, 1.0), &c, 3, 4);
        assert!(matches!(r, Err(Error::TooFewShells { found: 2 })));
        assert!(matches!(directional_decay(&power_law(1, 16, 1.0), &c, 3, 5), Err(Error::Starvation { .. })));
    }

    #[test]
    fn direction_rule_needs_every_covering_cone() {
        let cones: Vec<Cone> = crate::cones::circle_directions(8)
            .iter()
            .map(|a| Cone::from_degrees(a, 50.0).unwrap())
            .collect();
        let mut v = vec![Verdict::Regular; 8];
        v[0] = Verdict::Singular;
        v[1] = Verdict::Singular;
        let d = direction_verdicts(&cones, &v);
        // direction 0 is also covered by cone 7, which is regular
        assert_eq!(d[0], Verdict::Regular);
        v[7] = Verdict::Singular;
        let d = direction_verdicts(&cones, &v);
        assert_eq!(d[0], Verdict::Singular);
        assert_eq!(d[1], Verdict::Regular);
    }

    #[test]
    fn poor_fit_needs_every_local_order() {
        // energy alternates between two rates, so the fit residual is large
        let mut a = CoeffArray::zeros(1, 256).unwrap();
        for (i, v) in a.values_mut().iter_mut().enumerate() {
            let n = i as i64 - 256;
            if n > 0 {
                let k = (n as f64).log2().floor() as i32;
                *v = (2f64.powi(if k % 2 == 0 { -4 * k } else { -k })).into();
            }
        }
        let plus = Cone::from_degrees(&[1.0], 45.0).unwrap();
        let est = sobolev_order(&a, &plus, 3, 7).unwrap();
        assert!(est.poor_fit, "{}", est.residual);
        let lo = est.local_orders.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = est.local_orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo > 1.0);
        assert_eq!(est.verdict(lo - 0.5, 0.1), Verdict::Regular);
        assert_eq!(est.verdict(hi + 0.5, 0.1), Verdict::Singular);
        assert_eq!(est.verdict(0.5 * (lo + hi), 0.1), Verdict::Inconclusive);
    }

    #[test]
    fn default_params() {
        let p = ScanParams::new(2, 256).unwrap();
        assert_eq!((p.k_min, p.k_max), (5, 7));
        assert_eq!(p.directions.len(), 72);
        let p = ScanParams::new(1, 1024).unwrap();
        assert_eq!((p.k_min, p.k_max), (7, 9));
    }
}
