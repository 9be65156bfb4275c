//! Weights on the lattice, weighted sequence norms, the dual pairing, and
//! localization by a cut-off window.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::coeff_convolution;
use crate::coeffs::{fourier_coefficients, CoeffArray, CoeffSource};
use crate::error::{Error, Result};
use crate::grid::{CutoffWindow, Grid};

/// `<n> = (1 + |n|^2)^{1/2}`.
pub fn japanese(n: &[i64]) -> f64 {
    (1.0 + n.iter().map(|v| (*v as f64) * (*v as f64)).sum::<f64>()).sqrt()
}

/// A positive function on `Z^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    /// `<n>^s`.
    Polynomial { s: f64 },
    /// `e^{rate |n|}` (Euclidean norm).
    Exponential { rate: f64 },
    /// Values on the box `|n_j| <= radius`, row-major with axis 0 slowest.
    Tabulated { dim: usize, radius: usize, values: Vec<f64> },
}

impl Weight {
    pub fn polynomial(s: f64) -> Self {
        Weight::Polynomial { s }
    }

    pub fn one() -> Self {
        Weight::Polynomial { s: 0.0 }
    }

    /// `omega(n)`; NaN outside a tabulated range.
    pub fn eval(&self, n: &[i64]) -> f64 {
        match self {
            Weight::Polynomial { s } => {
                if *s == 0.0 {
                    1.0
                } else {
                    japanese(n).powf(*s)
                }
            }
            Weight::Exponential { rate } => {
                let r = n.iter().map(|v| (*v as f64) * (*v as f64)).sum::<f64>().sqrt();
                (rate * r).exp()
            }
            Weight::Tabulated { dim, radius, values } => {
                if n.len() != *dim {
                    return f64::NAN;
                }
                let side = 2 * radius + 1;
                let mut flat = 0usize;
                for &v in n {
                    if v.unsigned_abs() as usize > *radius {
                        return f64::NAN;
                    }
                    flat = flat * side + (v + *radius as i64) as usize;
                }
                values[flat]
            }
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Weight::Polynomial { s } if !s.is_finite() => Err(Error::Weight(format!("exponent {s} is not finite"))),
            Weight::Exponential { rate } if !rate.is_finite() => {
                Err(Error::Weight(format!("rate {rate} is not finite")))
            }
            Weight::Tabulated { dim, radius, values } => {
                if values.len() != (2 * radius + 1).pow(*dim as u32) {
                    return Err(Error::Weight("tabulated weight has the wrong number of values".into()));
                }
                if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(Error::Weight(format!("weight values must be positive and finite (found {v})")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Values on the box `|n_j| <= radius`, rejecting non-positive entries.
    pub fn table(&self, dim: usize, radius: usize) -> Result<Vec<f64>> {
        self.check()?;
        let side = 2 * radius + 1;
        let vals: Vec<f64> = (0..side.pow(dim as u32))
            .into_par_iter()
            .map(|flat| {
                let n = crate::coeffs::unravel(flat, dim, radius);
                self.eval(&n[..dim])
            })
            .collect();
        if let Some(v) = vals.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Weight(format!("weight is not positive and finite on the box (found {v})")));
        }
        Ok(vals)
    }
}

/// Exponent `q` of an `l^q` norm; `f64::INFINITY` selects the max norm.
pub fn check_exponent(q: f64) -> Result<()> {
    if q >= 1.0 {
        Ok(())
    } else {
        Err(Error::Exponent(q))
    }
}

/// `(sum_n |a_n omega(n)|^q)^{1/q}` over the box, or the max for `q = inf`.
pub fn weighted_norm(coeffs: &CoeffArray, weight: &Weight, q: f64) -> Result<f64> {
    check_exponent(q)?;
    let table = weight.table(coeffs.dim(), coeffs.n_max())?;
    let terms = coeffs.values().iter().zip(&table).map(|(a, w)| a.norm() * w);
    Ok(lq_norm(terms, q))
}

/// `l^q` norm of nonnegative terms, scaled by the largest to avoid overflow.
pub(crate) fn lq_norm<I: Iterator<Item = f64> + Clone>(terms: I, q: f64) -> f64 {
    let top = terms.clone().fold(0.0, f64::max);
    if q.is_infinite() || top == 0.0 {
        return top;
    }
    if q == 1.0 {
        return terms.sum();
    }
    let s: f64 = terms.map(|t| (t / top).powf(q)).sum();
    top * s.powf(1.0 / q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModerateVerdict {
    /// No growth of the empirical constant between `R/2` and `R`. This is a
    /// necessary condition only.
    ModerateUpToR,
    Growing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerateReport {
    pub dim: usize,
    pub radius: usize,
    /// `max omega(m+n) / (omega(m) nu(n))` over `|m|_inf, |n|_inf <= R`.
    pub constant: f64,
    /// The same maximum over the half radius.
    pub half_constant: f64,
    pub verdict: ModerateVerdict,
}

/// Growth of `C(R) / C(R/2)` above this counts as growing.
pub const GROWTH_RATIO: f64 = 1.1;

/// Exhaustive check of `omega(m+n) <= C omega(m) nu(n)` on the box of radius
/// `radius` in `Z^dim`.
pub fn is_nu_moderate(omega: &Weight, nu: &Weight, dim: usize, radius: usize) -> Result<ModerateReport> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    if radius < 1 {
        return Err(Error::Parameter("moderate-check radius must be at least 1".into()));
    }
    let side = 2 * radius + 1;
    let count = (side as f64).powi(2 * dim as i32);
    if count > 4e9 {
        return Err(Error::Parameter(format!(
            "radius {radius} in dimension {dim} needs {count:.1e} evaluations; reduce the radius"
        )));
    }
    let wide = omega.table(dim, 2 * radius)?;
    let om = omega.table(dim, radius)?;
    let nu_t = nu.table(dim, radius)?;
    let half = (radius / 2) as i64;
    let r = radius as i64;
    let wide_side = 4 * radius + 1;
    let len = side.pow(dim as u32);
    let (constant, half_constant) = (0..len)
        .into_par_iter()
        .map(|fm| {
            let m = crate::coeffs::unravel(fm, dim, radius);
            let m_half = m[..dim].iter().all(|v| v.abs() <= half);
            let mut best = (0.0f64, 0.0f64);
            for (fn_, nv) in nu_t.iter().enumerate() {
                let n = crate::coeffs::unravel(fn_, dim, radius);
                let mut flat = 0usize;
                for j in 0..dim {
                    flat = flat * wide_side + (m[j] + n[j] + 2 * r) as usize;
                }
                let ratio = wide[flat] / (om[fm] * nv);
                best.0 = best.0.max(ratio);
                if m_half && n[..dim].iter().all(|v| v.abs() <= half) {
                    best.1 = best.1.max(ratio);
                }
            }
            best
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let verdict = if constant > GROWTH_RATIO * half_constant {
        ModerateVerdict::Growing
    } else {
        ModerateVerdict::ModerateUpToR
    };
    Ok(ModerateReport { dim, radius, constant, half_constant, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    /// `(N_max, partial norm)` at each level.
    pub partial_norms: Vec<(usize, f64)>,
    pub verdict: Membership,
}

/// Radii at which partial norms are taken.
pub const MEMBERSHIP_LEVELS: [usize; 4] = [64, 128, 256, 512];
/// Relative increment of the last level below which a series counts as
/// convergent.
pub const MEMBERSHIP_TOL: f64 = 1e-3;

/// Decides from partial norms on growing boxes whether the weighted norm is
/// finite. Divergent means the dyadic increments of `sum |a_n omega(n)|^q` do
/// not shrink.
pub fn membership_estimate<F>(source: F, weight: &Weight, q: f64) -> Result<MembershipReport>
where
    F: Fn(usize) -> Result<CoeffArray>,
{
    membership_at(source, weight, q, &MEMBERSHIP_LEVELS)
}

pub fn membership_at<F>(source: F, weight: &Weight, q: f64, levels: &[usize]) -> Result<MembershipReport>
where
    F: Fn(usize) -> Result<CoeffArray>,
{
    check_exponent(q)?;
    if levels.len() < 3 {
        return Err(Error::Parameter("membership needs at least three levels".into()));
    }
    let mut partial_norms = Vec::with_capacity(levels.len());
    for &n in levels {
        let a = source(n)?;
        let a = if a.n_max() > n { a.truncate(n)? } else { a };
        partial_norms.push((n, weighted_norm(&a, weight, q)?));
    }
    let norms: Vec<f64> = partial_norms.iter().map(|p| p.1).collect();
    let last = norms[norms.len() - 1];
    let prev = norms[norms.len() - 2];
    let verdict = if last == 0.0 || (last - prev) / last < MEMBERSHIP_TOL {
        Membership::Convergent
    } else {
        let powers: Vec<f64> = if q.is_infinite() { norms.clone() } else { norms.iter().map(|v| v.powf(q)).collect() };
        let incs: Vec<f64> = powers.windows(2).map(|w| w[1] - w[0]).collect();
        // 2% slack absorbs the discreteness of shell sums
        if incs.windows(2).all(|w| w[1] >= 0.98 * w[0]) && incs[incs.len() - 1] > 0.0 {
            Membership::Divergent
        } else {
            Membership::Inconclusive
        }
    };
    Ok(MembershipReport { partial_norms, verdict })
}

/// `sum_n f_n phi_{-n}` over the common box.
pub fn dual_pairing(f: &CoeffArray, phi: &CoeffArray) -> Result<Complex64> {
    if f.dim() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: phi.dim() });
    }
    let d = f.dim();
    let r = f.n_max().min(phi.n_max());
    let side = 2 * r + 1;
    let mut acc = Complex64::default();
    for flat in 0..side.pow(d as u32) {
        let n = crate::coeffs::unravel(flat, d, r);
        let neg = [-n[0], -n[1], -n[2]];
        acc += f.get_or_zero(&n[..d]) * phi.get_or_zero(&neg[..d]);
    }
    Ok(acc)
}

/// Coefficients of a window sampled on `grid`, truncated where they fall
/// below `1e-14` of the mean (the window's numerical bandwidth).
pub fn window_coefficients(window: &CutoffWindow, grid: &Grid) -> Result<CoeffArray> {
    let full = fourier_coefficients(&window.sample(grid)?, grid.m() / 2 - 1)?;
    let floor = 1e-14 * full.get_or_zero(&vec![0; grid.dim()]).norm();
    let mut band = 0usize;
    for (n, v) in full.iter() {
        if v.norm() > floor {
            band = band.max(n[..grid.dim()].iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0));
        }
    }
    full.truncate(band)
}

/// Coefficients of `window_p * f` on the largest box the input supports
/// (input radius minus window bandwidth).
pub fn localize(f: &CoeffArray, window: &CutoffWindow, grid: &Grid) -> Result<CoeffArray> {
    let phi = window_coefficients(window, grid)?;
    if f.n_max() <= phi.n_max() {
        return Err(Error::Starvation { required: phi.n_max() + 1, available: f.n_max() });
    }
    localize_with(f, &phi, f.n_max() - phi.n_max())
}

/// As [`localize`] with an explicit output radius.
pub fn localize_to(f: &CoeffArray, window: &CutoffWindow, grid: &Grid, n_out: usize) -> Result<CoeffArray> {
    let phi = window_coefficients(window, grid)?;
    localize_with(f, &phi, n_out)
}

/// Localization by given window coefficients.
pub fn localize_with(f: &CoeffArray, phi: &CoeffArray, n_out: usize) -> Result<CoeffArray> {
    if f.dim() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: phi.dim() });
    }
    let required = n_out + phi.n_max();
    if f.n_max() < required {
        return Err(Error::Starvation { required, available: f.n_max() });
    }
    let conv = coeff_convolution(f, phi, n_out)?;
    Ok(conv.coeffs.with_source(CoeffSource::Product))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationBound {
    /// `||window_p f||` with weight `omega` and exponent `q`.
    pub localized_norm: f64,
    /// `||window_p||` with weight `nu` and exponent 1.
    pub window_norm: f64,
    pub input_norm: f64,
    pub constant: f64,
    pub holds: bool,
}

/// Checks `||phi f||_{q,omega} <= C ||phi||_{1,nu} ||f||_{q,omega}` with `C`
/// from [`is_nu_moderate`] over the radius spanned by the inputs.
pub fn localization_bound(
    f: &CoeffArray,
    phi: &CoeffArray,
    omega: &Weight,
    nu: &Weight,
    q: f64,
) -> Result<LocalizationBound> {
    let n_out = f.n_max() + phi.n_max();
    let localized = coeff_convolution(f, phi, n_out)?.coeffs;
    let moderate = is_nu_moderate(omega, nu, f.dim(), f.n_max().max(phi.n_max()))?;
    let localized_norm = weighted_norm(&localized, omega, q)?;
    let window_norm = weighted_norm(phi, nu, 1.0)?;
    let input_norm = weighted_norm(f, omega, q)?;
    let rhs = moderate.constant * window_norm * input_norm;
    Ok(LocalizationBound {
        localized_norm,
        window_norm,
        input_norm,
        constant: moderate.constant,
        holds: localized_norm <= rhs * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::bump_window;

    #[test]
    fn constant_weights_are_moderate_with_constant_one() {
        let r = is_nu_moderate(&Weight::one(), &Weight::one(), 2, 6).unwrap();
        assert_eq!(r.constant, 1.0);
        assert_eq!(r.verdict, ModerateVerdict::ModerateUpToR);
    }

    #[test]
    fn exponential_weight_grows() {
        let r = is_nu_moderate(&Weight::Exponential { rate: 1.0 }, &Weight::polynomial(3.0), 1, 30).unwrap();
        assert!(r.constant / r.half_constant > 1.5);
        assert_eq!(r.verdict, ModerateVerdict::Growing);
    }

    #[test]
    fn non_positive_tabulated_weight_is_rejected() {
        let w = Weight::Tabulated { dim: 1, radius: 1, values: vec![1.0, 0.0, 1.0] };
        assert!(matches!(is_nu_moderate(&w, &Weight::one(), 1, 1), Err(Error::Weight(_))));
    }

    #[test]
    fn three_term_norm() {
        let a = CoeffArray::from_fn(1, 4, |n| if n[0].abs() <= 1 { 1.0.into() } else { 0.0.into() }).unwrap();
        let v = weighted_norm(&a, &Weight::polynomial(1.0), 1.0).unwrap();
        assert!((v - (1.0 + 2.0 * 2f64.sqrt())).abs() < 1e-14);
        assert!(weighted_norm(&a, &Weight::one(), 0.5).is_err());
        assert_eq!(weighted_norm(&a, &Weight::polynomial(1.0), f64::INFINITY).unwrap(), 2f64.sqrt());
    }

    #[test]
    fn membership_verdicts() {
        let series = |s: f64| move |n: usize| CoeffArray::from_fn(1, n, |k| japanese(k).powf(s).into());
        let conv = membership_estimate(series(-2.0), &Weight::one(), 2.0).unwrap();
        assert_eq!(conv.verdict, Membership::Convergent);
        let div = membership_estimate(series(0.0), &Weight::polynomial(1.0), 2.0).unwrap();
        assert_eq!(div.verdict, Membership::Divergent);
        // sum <n>^{-2} converges
        let edge = membership_estimate(series(0.0), &Weight::polynomial(-1.0), 2.0).unwrap();
        assert_eq!(edge.verdict, Membership::Convergent);
    }

    #[test]
    fn pairing_of_opposite_exponentials() {
        let f = CoeffArray::from_fn(1, 3, |n| if n[0] == 1 { 1.0.into() } else { 0.0.into() }).unwrap();
        let g = CoeffArray::from_fn(1, 5, |n| if n[0] == -1 { 1.0.into() } else { 0.0.into() }).unwrap();
        assert_eq!(dual_pairing(&f, &g).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn localizing_the_constant_gives_the_window() {
        let grid = Grid::new(1, 256).unwrap();
        let w = bump_window(&[0.3], 0.05, 0.25).unwrap();
        let phi = window_coefficients(&w, &grid).unwrap();
        let one = CoeffArray::from_fn(1, phi.n_max() + 10, |n| if n[0] == 0 { 1.0.into() } else { 0.0.into() })
            .unwrap();
        let out = localize(&one, &w, &grid).unwrap();
        assert_eq!(out.n_max(), 10);
        for (n, v) in out.iter() {
            assert!((v - phi.get_or_zero(&n[..1])).norm() < 1e-15);
        }
        assert!(matches!(localize_to(&one, &w, &grid, 20), Err(Error::Starvation { .. })));
    }
}
