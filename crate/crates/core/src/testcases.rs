//! Oracle distributions with classically known wave front sets.
//!
//! Each case carries the fiber of `WF(u)` it should produce at a point,
//! together with the critical Sobolev order there. The sampled model of a
//! distribution lives on one period cell centred at its location, so points
//! on the cell boundary can carry extra wrap-around singularities; no truth
//! is claimed there.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{analytic_coeffs, CoeffArray, CoeffSource, DistKind, TestDistribution};
use crate::cones::angle_between;
use crate::error::{Error, Result};
use crate::grid::{wrap, CutoffWindow, Grid, SampledField};

/// Distance below which a point counts as lying on a singular set.
const ON_SET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Coefficients in closed form.
    ClosedForm,
    /// Composite quadrature, refined until successive levels agree.
    Refined,
}

/// Fiber of the wave front set over a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fiber", rename_all = "snake_case")]
pub enum Fiber {
    Empty,
    /// Every direction.
    All,
    /// The two unit conormals `+-normal`.
    Conormal { normal: Vec<f64> },
}

impl Fiber {
    /// Whether `axis` is within `tol` radians of the fiber.
    pub fn contains(&self, axis: &[f64], tol: f64) -> bool {
        match self {
            Fiber::Empty => false,
            Fiber::All => true,
            Fiber::Conormal { normal } => {
                let minus: Vec<f64> = normal.iter().map(|v| -v).collect();
                angle_between(axis, normal) <= tol || angle_between(axis, &minus) <= tol
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub fiber: Fiber,
    /// Critical Sobolev order on the fiber; `None` when the fiber is empty.
    pub sobolev_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub name: String,
    pub dist: TestDistribution,
    pub route: Route,
    pub justification: String,
}

fn centre(dim: usize) -> Vec<f64> {
    vec![0.5; dim]
}

impl OracleCase {
    fn new(name: &str, dist: TestDistribution, justification: &str) -> Result<Self> {
        dist.validate()?;
        let route = match dist.kind {
            DistKind::Delta | DistKind::PlaneWave { .. } => Route::ClosedForm,
            _ => Route::Refined,
        };
        Ok(OracleCase { name: name.into(), dist, route, justification: justification.into() })
    }

    pub fn delta(dim: usize) -> Result<Self> {
        Self::new(
            "delta",
            TestDistribution::delta(&centre(dim)),
            "The Fourier transform of a point mass is a nonzero constant, so it decays in no \
             direction: the fiber at the point is every direction. It lies in H^s exactly for \
             s < -d/2.",
        )
    }

    pub fn square_wave() -> Result<Self> {
        Self::new(
            "square_wave",
            TestDistribution::square_wave(0.5),
            "A jump has coefficients of size 1/|n| on both sides, so both directions are \
             singular at the jumps (x0 and x0 + 1/2). A jump lies in H^s exactly for s < 1/2.",
        )
    }

    pub fn kink() -> Result<Self> {
        Self::new(
            "kink",
            TestDistribution::kink(0.5),
            "|x| has coefficients of size 1/n^2 at its corner, so both directions are singular \
             at x0 and at the opposite corner x0 + 1/2 of the periodic triangle wave. It lies \
             in H^s exactly for s < 3/2.",
        )
    }

    pub fn gaussian(dim: usize, width: f64) -> Result<Self> {
        Self::new(
            "gaussian",
            TestDistribution::gaussian(&centre(dim), width),
            "A Gaussian is smooth, so its localized coefficients decay rapidly in every \
             direction and the wave front set is empty away from the cell boundary.",
        )
    }

    pub fn halfplane_edge(normal: [f64; 2]) -> Result<Self> {
        Self::new(
            "halfplane_edge",
            TestDistribution::halfplane_edge([0.5, 0.5], normal)?,
            "The indicator of a half-plane is conormal to its edge: the transform of a \
             localized piece decays rapidly except along the normal line. Across the edge it \
             behaves like a 1-D jump, so it lies in H^s exactly for s < 1/2.",
        )
    }

    pub fn line_delta(normal: [f64; 2]) -> Result<Self> {
        Self::new(
            "line_delta",
            TestDistribution::line_delta([0.5, 0.5], normal)?,
            "Arc length on a line is conormal to the line, and across it behaves like a 1-D \
             point mass, so it lies in H^s exactly for s < -1/2.",
        )
    }

    pub fn plane_wave(wave: &[i64]) -> Result<Self> {
        Self::new(
            "plane_wave",
            TestDistribution::plane_wave(wave),
            "A trigonometric monomial is smooth and periodic, so the wave front set is empty.",
        )
    }

    /// Same case multiplied by `e_m`; smooth factors leave the wave front set
    /// unchanged.
    pub fn modulated(mut self, m: &[i64]) -> Result<Self> {
        self.dist = self.dist.modulated(m);
        self.dist.validate()?;
        self.name = format!("{}_mod", self.name);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    /// Ground truth at `x0`, or `None` on the boundary of the period cell
    /// where the sampled model has wrap-around jumps.
    pub fn truth_at(&self, x0: &[f64]) -> Result<Option<Truth>> {
        let d = self.dim();
        if x0.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
        }
        let u: Vec<f64> = x0.iter().zip(&self.dist.location).map(|(a, b)| wrap(a - b)).collect();
        let on_boundary = u.iter().any(|v| (v.abs() - 0.5).abs() < ON_SET);
        let at = |fiber, s| Some(Truth { fiber, sobolev_order: Some(s) });
        let empty = Some(Truth { fiber: Fiber::Empty, sobolev_order: None });
        Ok(match &self.dist.kind {
            DistKind::Delta => {
                if u.iter().all(|v| v.abs() < ON_SET) {
                    at(Fiber::All, -(d as f64) / 2.0)
                } else {
                    empty
                }
            }
            // the second jump or corner at x0 + 1/2 is part of the model
            DistKind::SquareWave1d | DistKind::Kink1d => {
                let s = if self.dist.kind == DistKind::SquareWave1d { 0.5 } else { 1.5 };
                if u[0].abs() < ON_SET || on_boundary {
                    at(Fiber::All, s)
                } else {
                    empty
                }
            }
            DistKind::HalfplaneEdge2d { normal } | DistKind::LineDelta2d { normal } => {
                if on_boundary {
                    None
                } else if (normal[0] * u[0] + normal[1] * u[1]).abs() < ON_SET {
                    let s = if matches!(self.dist.kind, DistKind::LineDelta2d { .. }) { -0.5 } else { 0.5 };
                    at(Fiber::Conormal { normal: normal.clone() }, s)
                } else {
                    empty
                }
            }
            DistKind::GaussianSmooth { .. } => {
                if on_boundary {
                    None
                } else {
                    empty
                }
            }
            DistKind::PlaneWave { .. } => empty,
        })
    }
}

/// Default catalog spanning empty, full-fiber, conormal and graded fibers.
pub fn catalog() -> Result<Vec<OracleCase>> {
    Ok(vec![
        OracleCase::delta(1)?,
        OracleCase::delta(2)?,
        OracleCase::square_wave()?,
        OracleCase::kink()?,
        OracleCase::gaussian(1, 0.01)?,
        OracleCase::gaussian(2, 0.01)?,
        OracleCase::halfplane_edge([1.0, 0.0])?,
        OracleCase::halfplane_edge([1.0, 1.0])?,
        OracleCase::line_delta([0.0, 1.0])?,
        OracleCase::plane_wave(&[3, -2])?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum Target {
    /// Samples of the periodic model on an `M^d` grid.
    Grid { m: usize },
    /// Exact coefficients of the periodic model, without localization.
    Periodic { n_max: usize },
    /// Coefficients of `(window u)_p`.
    Localized { n_max: usize, window: CutoffWindow },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Field(SampledField),
    Coeffs(CoeffArray),
}

/// Produces samples or coefficients of an oracle case. Deterministic.
pub fn generate(case: &OracleCase, target: &Target) -> Result<Generated> {
    match target {
        Target::Grid { m } => {
            let grid = Grid::new(case.dim(), *m)?;
            Ok(Generated::Field(case.dist.sample(&grid)?))
        }
        Target::Periodic { n_max } => periodic_coeffs(&case.dist, *n_max).map(Generated::Coeffs),
        Target::Localized { n_max, window } => analytic_coeffs(&case.dist, window, *n_max).map(Generated::Coeffs),
    }
}

/// Closed-form Fourier series of the periodic model. Only kinds whose model
/// is a genuine periodic distribution have one.
pub fn periodic_coeffs(dist: &TestDistribution, n_max: usize) -> Result<CoeffArray> {
    dist.validate()?;
    let d = dist.dim();
    let x0 = &dist.location;
    let shift = |n: &[i64]| -> Complex64 {
        let phase: f64 = n.iter().zip(x0).map(|(a, b)| *a as f64 * b).sum();
        turns(-phase)
    };
    type CoeffFn<'a> = Box<dyn Fn(&[i64]) -> Complex64 + 'a>;
    let base: CoeffFn = match &dist.kind {
        DistKind::Delta => Box::new(move |n| shift(n)),
        DistKind::SquareWave1d => Box::new(move |n| {
            if n[0] % 2 == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                shift(n) * Complex64::new(0.0, -2.0 / (PI * n[0] as f64))
            }
        }),
        DistKind::Kink1d => Box::new(move |n| match n[0] {
            0 => Complex64::new(0.25, 0.0),
            k if k % 2 == 0 => Complex64::new(0.0, 0.0),
            k => shift(n) * (-1.0 / (PI * PI * (k * k) as f64)),
        }),
        DistKind::PlaneWave { wave } => {
            let wave = wave.clone();
            Box::new(move |n| if n[..d] == wave[..] { 1.0.into() } else { 0.0.into() })
        }
        _ => {
            return Err(Error::Distribution(format!(
                "{} has no closed-form periodic series; generate localized coefficients instead",
                dist.name()
            )))
        }
    };
    let m = dist.modulation.clone().unwrap_or_else(|| vec![0; d]);
    let out = CoeffArray::from_fn(d, n_max, |n| {
        let shifted: Vec<i64> = n[..d].iter().zip(&m).map(|(a, b)| a - b).collect();
        base(&shifted)
    })?;
    Ok(out.with_source(CoeffSource::Analytic { level: None, nodes_per_unit: None, tolerance: None }))
}

/// `e^{2 pi i t}`, exact when `t` is a multiple of 1/4.
fn turns(t: f64) -> Complex64 {
    let t = t.rem_euclid(1.0);
    let q = t * 4.0;
    match q as u8 {
        0 if q == 0.0 => Complex64::new(1.0, 0.0),
        1 if q == 1.0 => Complex64::new(0.0, 1.0),
        2 if q == 2.0 => Complex64::new(-1.0, 0.0),
        3 if q == 3.0 => Complex64::new(0.0, -1.0),
        _ => Complex64::from_polar(1.0, 2.0 * PI * t),
    }
}
