//! Uniform sampling of the unit torus cell, the smooth plateau cut-off and
//! periodization of windowed data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps a real offset into `[-1/2, 1/2)`.
#[inline]
pub fn wrap(t: f64) -> f64 {
    t - (t + 0.5).floor()
}

/// Uniform grid with `m` samples per axis on `[0,1)^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    m: usize,
}

impl Grid {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::GridSize(m));
        }
        Ok(Grid { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Total number of samples, `m^dim`.
    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of a row-major flat index (axis 0 slowest).
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut k = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            k[axis] = rest % self.m;
            rest /= self.m;
        }
        k
    }

    /// Coordinates `k/M` of a flat index; unused trailing axes are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let k = self.unravel(flat);
        let h = self.spacing();
        [k[0] as f64 * h, k[1] as f64 * h, k[2] as f64 * h]
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Convenience constructor mirroring [`Grid::new`].
pub fn make_grid(dim: usize, m: usize) -> Result<Grid> {
    Grid::new(dim, m)
}

/// Complex samples on a [`Grid`], row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    grid: Grid,
    values: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<String>,
}

impl SampledField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Format(format!(
                "expected {} samples for d={}, M={}, got {}",
                grid.len(),
                grid.dim(),
                grid.m(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(SampledField { grid, values, meta: None })
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = Some(meta.into());
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn meta(&self) -> Option<&str> {
        self.meta.as_deref()
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }
}

/// Samples `f` at every grid point.
pub fn sample<F>(f: F, grid: &Grid) -> Result<SampledField>
where
    F: Fn(&[f64]) -> Complex64,
{
    let d = grid.dim();
    let values: Vec<Complex64> = grid.points().map(|x| f(&x[..d])).collect();
    SampledField::new(*grid, values)
}

/// The standard smooth step `e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`:
/// 0 for `t <= 0`, 1 for `t >= 1`, C-infinity in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Tensor-product plateau bump: 1 on the box of half-width `eps_in` around
/// `center`, 0 outside the box of half-width `eps_out`, distances taken mod 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffWindow {
    center: Vec<f64>,
    eps_in: f64,
    eps_out: f64,
}

impl CutoffWindow {
    pub fn new(center: &[f64], eps_in: f64, eps_out: f64) -> Result<Self> {
        if !(1..=3).contains(&center.len()) {
            return Err(Error::Dimension(center.len()));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Window("center must be finite".into()));
        }
        if !(eps_in > 0.0 && eps_in.is_finite()) {
            return Err(Error::Window(format!("inner half-width must be positive (got {eps_in})")));
        }
        if eps_in >= eps_out {
            return Err(Error::Window(format!(
                "inner half-width {eps_in} must be below outer half-width {eps_out}"
            )));
        }
        if eps_out >= 0.5 {
            return Err(Error::Window(format!(
                "outer half-width {eps_out} must be below 1/2 so the support fits in one period"
            )));
        }
        let center = center.iter().map(|c| c.rem_euclid(1.0)).collect();
        Ok(CutoffWindow { center, eps_in, eps_out })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Center reduced to `[0,1)^d`.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn eps_in(&self) -> f64 {
        self.eps_in
    }

    pub fn eps_out(&self) -> f64 {
        self.eps_out
    }

    /// Same radii, new center.
    pub fn recentered(&self, center: &[f64]) -> Result<Self> {
        CutoffWindow::new(center, self.eps_in, self.eps_out)
    }

    /// One-axis profile as a function of the distance to the center.
    pub fn profile(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.eps_in {
            1.0
        } else if r >= self.eps_out {
            0.0
        } else {
            smooth_step((self.eps_out - r) / (self.eps_out - self.eps_in))
        }
    }

    /// Window value at `x`, periodic with period 1 in each variable.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(x)
            .map(|(c, xi)| self.profile(wrap(xi - c)))
            .product()
    }

    pub fn in_plateau(&self, x: &[f64]) -> bool {
        self.center.iter().zip(x).all(|(c, xi)| wrap(xi - c).abs() <= self.eps_in)
    }

    pub fn in_support(&self, x: &[f64]) -> bool {
        self.center.iter().zip(x).all(|(c, xi)| wrap(xi - c).abs() < self.eps_out)
    }

    /// Rejects grids that put fewer than two samples across the transition.
    pub fn check_resolution(&self, grid: &Grid) -> Result<()> {
        if grid.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: self.dim() });
        }
        if self.eps_out - self.eps_in < 2.0 * grid.spacing() {
            return Err(Error::Window(format!(
                "transition width {} is below two samples (2/M = {}) and would alias",
                self.eps_out - self.eps_in,
                2.0 * grid.spacing()
            )));
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Grid) -> Result<SampledField> {
        self.check_resolution(grid)?;
        sample(|x| Complex64::new(self.value(x), 0.0), grid)
    }
}

/// Convenience constructor mirroring [`CutoffWindow::new`].
pub fn bump_window(center: &[f64], eps_in: f64, eps_out: f64) -> Result<CutoffWindow> {
    CutoffWindow::new(center, eps_in, eps_out)
}

/// One period of `(window * field)_p`. The window support lies inside one
/// period, so this is a pointwise product on the cell with wrapped distances.
pub fn periodize(field: &SampledField, window: &CutoffWindow) -> Result<SampledField> {
    window.check_resolution(field.grid())?;
    let grid = *field.grid();
    let d = grid.dim();
    let values = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * window.value(&grid.point(i)[..d]))
        .collect();
    let out = SampledField::new(grid, values)?;
    Ok(match field.meta() {
        Some(m) => out.with_meta(format!("{m}; periodized")),
        None => out,
    })
}
