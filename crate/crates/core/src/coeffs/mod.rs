//! Fourier coefficients `a_n = \int_{[0,1)^d} f(x) e^{-2 pi i n.x} dx` on a
//! truncated box `|n_j| <= N_max`, computed from samples or from closed-form
//! and quadrature generators for analytic test distributions.

mod analytic;
pub(crate) mod quadrature;

pub use analytic::{analytic_coeffs, DistKind, TestDistribution};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{periodize, CutoffWindow, Grid, SampledField};

/// Multi-index into a coefficient box; trailing unused axes are zero.
pub type Index = [i64; 3];

/// Where a coefficient array came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoeffSource {
    /// DFT of samples on an `M^d` grid.
    Field { m: usize },
    /// Closed form (`level` is `None`) or quadrature refined until two
    /// successive levels agree to `tolerance`.
    Analytic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes_per_unit: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// Coefficient convolution of two arrays.
    Product,
    /// Built directly from given values.
    Explicit,
}

/// Coefficients `a_n` for `n` in `{-N_max, ..., N_max}^d`, row-major with axis
/// 0 slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffArray {
    dim: usize,
    n_max: usize,
    data: Vec<Complex64>,
    source: CoeffSource,
}

impl CoeffArray {
    pub fn new(dim: usize, n_max: usize, data: Vec<Complex64>, source: CoeffSource) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        let expected = (2 * n_max + 1).pow(dim as u32);
        if data.len() != expected {
            return Err(Error::Format(format!(
                "coefficient box d={dim}, N_max={n_max} needs {expected} entries, got {}",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(CoeffArray { dim, n_max, data, source })
    }

    pub fn zeros(dim: usize, n_max: usize) -> Result<Self> {
        let len = (2 * n_max + 1).pow(dim as u32);
        CoeffArray::new(dim, n_max, vec![Complex64::default(); len], CoeffSource::Explicit)
    }

    /// Builds an array by evaluating `f` at every index of the box.
    pub fn from_fn<F>(dim: usize, n_max: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[i64]) -> Complex64,
    {
        let side = 2 * n_max + 1;
        let len = side.pow(dim as u32);
        let data = (0..len)
            .map(|flat| {
                let n = unravel(flat, dim, n_max);
                f(&n[..dim])
            })
            .collect();
        CoeffArray::new(dim, n_max, data, CoeffSource::Explicit)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn side(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn source(&self) -> &CoeffSource {
        &self.source
    }

    pub fn with_source(mut self, source: CoeffSource) -> Self {
        self.source = source;
        self
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn index_of(&self, flat: usize) -> Index {
        unravel(flat, self.dim, self.n_max)
    }

    pub fn flat_of(&self, n: &[i64]) -> Option<usize> {
        if n.len() != self.dim {
            return None;
        }
        let r = self.n_max as i64;
        let side = self.side();
        let mut flat = 0usize;
        for &nj in n {
            if nj.abs() > r {
                return None;
            }
            flat = flat * side + (nj + r) as usize;
        }
        Some(flat)
    }

    /// `a_n`, or `None` outside the box.
    pub fn get(&self, n: &[i64]) -> Option<Complex64> {
        self.flat_of(n).map(|i| self.data[i])
    }

    /// `a_n`, zero outside the box.
    pub fn get_or_zero(&self, n: &[i64]) -> Complex64 {
        self.get(n).unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Index, Complex64)> + '_ {
        self.data.iter().enumerate().map(move |(i, v)| (self.index_of(i), *v))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Restriction to a smaller box.
    pub fn truncate(&self, n_max: usize) -> Result<Self> {
        if n_max > self.n_max {
            return Err(Error::Starvation { required: n_max, available: self.n_max });
        }
        let out = CoeffArray::from_fn(self.dim, n_max, |n| self.get_or_zero(n))?;
        Ok(out.with_source(self.source.clone()))
    }

    /// Coefficients of `e_m f`: `b_n = a_{n-m}`. The result keeps the box of
    /// `self`; entries whose preimage falls outside the box are zero.
    pub fn modulate(&self, m: &[i64]) -> Result<Self> {
        if m.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: m.len() });
        }
        let out = CoeffArray::from_fn(self.dim, self.n_max, |n| {
            let mut k = [0i64; 3];
            for j in 0..n.len() {
                k[j] = n[j] - m[j];
            }
            self.get_or_zero(&k[..n.len()])
        })?;
        Ok(out.with_source(self.source.clone()))
    }

    /// Largest `|a_n - conj(a_{-n})|`; zero for coefficients of a real field.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, v) in self.data.iter().enumerate() {
            let n = self.index_of(i);
            let neg = [-n[0], -n[1], -n[2]];
            let w = self.get_or_zero(&neg[..self.dim]);
            worst = worst.max((v - w.conj()).norm());
        }
        worst
    }

    pub fn scale(&mut self, factor: Complex64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }
}

pub(crate) fn unravel(flat: usize, dim: usize, n_max: usize) -> Index {
    let side = 2 * n_max + 1;
    let mut n = [0i64; 3];
    let mut rest = flat;
    for axis in (0..dim).rev() {
        n[axis] = (rest % side) as i64 - n_max as i64;
        rest /= side;
    }
    n
}

/// `a_n = M^{-d} sum_k values[k] e^{-2 pi i n.k/M}` for `|n_j| <= n_max`.
pub fn fourier_coefficients(field: &SampledField, n_max: usize) -> Result<CoeffArray> {
    let grid = field.grid();
    let m = grid.m();
    if 2 * n_max >= m {
        return Err(Error::Truncation { n_max, half: m / 2 });
    }
    let dim = grid.dim();
    let mut buf = field.values().to_vec();
    fft::forward(&mut buf, dim, m);
    let scale = 1.0 / grid.len() as f64;
    let out = CoeffArray::from_fn(dim, n_max, |n| {
        let mut flat = 0usize;
        for &nj in n {
            flat = flat * m + nj.rem_euclid(m as i64) as usize;
        }
        buf[flat] * scale
    })?;
    Ok(out.with_source(CoeffSource::Field { m }))
}

/// `values[k] = sum_n a_n e^{2 pi i n.k/M}`.
pub fn synthesize(coeffs: &CoeffArray, grid: &Grid) -> Result<SampledField> {
    let m = grid.m();
    if grid.dim() != coeffs.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: coeffs.dim() });
    }
    if 2 * coeffs.n_max() >= m {
        return Err(Error::Truncation { n_max: coeffs.n_max(), half: m / 2 });
    }
    let dim = grid.dim();
    let mut buf = vec![Complex64::default(); grid.len()];
    for (n, v) in coeffs.iter() {
        let mut flat = 0usize;
        for &nj in &n[..dim] {
            flat = flat * m + nj.rem_euclid(m as i64) as usize;
        }
        buf[flat] = v;
    }
    fft::inverse(&mut buf, dim, m);
    SampledField::new(*grid, buf)
}

/// Something whose localized coefficients can be computed: grid samples or an
/// analytic test distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "input", rename_all = "snake_case")]
pub enum Input {
    Field(SampledField),
    Analytic(TestDistribution),
}

impl Input {
    pub fn dim(&self) -> usize {
        match self {
            Input::Field(f) => f.grid().dim(),
            Input::Analytic(t) => t.dim(),
        }
    }

    /// Coefficients of `(window * self)_p` on the box `|n_j| <= n_max`.
    pub fn localized(&self, window: &CutoffWindow, n_max: usize) -> Result<CoeffArray> {
        match self {
            Input::Field(f) => fourier_coefficients(&periodize(f, window)?, n_max),
            Input::Analytic(t) => analytic_coeffs(t, window, n_max),
        }
    }

    /// Largest radius `localized` accepts (`None` when unbounded).
    pub fn max_radius(&self) -> Option<usize> {
        match self {
            Input::Field(f) => Some(f.grid().m() / 2 - 1),
            Input::Analytic(_) => None,
        }
    }
}

impl From<SampledField> for Input {
    fn from(f: SampledField) -> Self {
        Input::Field(f)
    }
}

impl From<TestDistribution> for Input {
    fn from(t: TestDistribution) -> Self {
        Input::Analytic(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample};
    use std::f64::consts::PI;

    fn e_k(k: &[i64]) -> impl Fn(&[f64]) -> Complex64 + '_ {
        move |x| {
            let phase: f64 = k.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
            Complex64::from_polar(1.0, 2.0 * PI * phase)
        }
    }

    #[test]
    fn constant_field_has_only_mean() {
        let g = make_grid(2, 16).unwrap();
        let f = sample(|_| Complex64::new(1.0, 0.0), &g).unwrap();
        let a = fourier_coefficients(&f, 5).unwrap();
        for (n, v) in a.iter() {
            let expect = if n == [0, 0, 0] { 1.0 } else { 0.0 };
            assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn exponential_is_a_unit_vector() {
        let g = make_grid(2, 32).unwrap();
        let k = [3i64, -7];
        let f = sample(e_k(&k), &g).unwrap();
        let a = fourier_coefficients(&f, 15).unwrap();
        for (n, v) in a.iter() {
            let expect = if n[..2] == k { 1.0 } else { 0.0 };
            assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-12, "{n:?}");
        }
    }

    #[test]
    fn cosine_splits_in_halves() {
        let g = make_grid(1, 64).unwrap();
        let f = sample(|x| Complex64::new((2.0 * PI * x[0]).cos(), 0.0), &g).unwrap();
        let a = fourier_coefficients(&f, 4).unwrap();
        assert!((a.get(&[1]).unwrap().re - 0.5).abs() < 1e-14);
        assert!((a.get(&[-1]).unwrap().re - 0.5).abs() < 1e-14);
        assert!(a.get(&[0]).unwrap().norm() < 1e-14);
        assert!(a.hermitian_defect() < 1e-14);
    }

    #[test]
    fn truncation_at_half_grid_is_rejected() {
        let g = make_grid(1, 16).unwrap();
        let f = sample(|_| Complex64::new(1.0, 0.0), &g).unwrap();
        assert!(matches!(fourier_coefficients(&f, 8), Err(Error::Truncation { .. })));
        assert!(fourier_coefficients(&f, 7).is_ok());
    }

    #[test]
    fn synthesize_unit_mean_is_constant() {
        let a = CoeffArray::from_fn(2, 3, |n| {
            if n.iter().all(|v| *v == 0) { Complex64::new(1.0, 0.0) } else { Complex64::default() }
        })
        .unwrap();
        let f = synthesize(&a, &make_grid(2, 16).unwrap()).unwrap();
        assert!(f.values().iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn modulation_shifts_indices() {
        let a = CoeffArray::from_fn(1, 4, |n| Complex64::new(n[0] as f64, 0.0)).unwrap();
        let b = a.modulate(&[2]).unwrap();
        assert_eq!(b.get(&[3]).unwrap().re, 1.0);
        assert_eq!(b.get(&[-4]).unwrap().re, 0.0);
        assert_eq!(b.get(&[-3]).unwrap().re, 0.0);
        assert_eq!(b.get(&[-2]).unwrap().re, -4.0);
    }

    #[test]
    fn index_round_trip() {
        let a = CoeffArray::zeros(3, 2).unwrap();
        for i in 0..a.len() {
            let n = a.index_of(i);
            assert_eq!(a.flat_of(&n).unwrap(), i);
        }
        assert_eq!(a.flat_of(&[3, 0, 0]), None);
    }
}
