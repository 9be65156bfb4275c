//! Products of periodic distributions by convolution of their coefficient
//! sequences, local products through cut-offs, and Young-type norm bounds.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{unravel, CoeffArray, CoeffSource, Input};
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::CutoffWindow;
use crate::spaces::{is_nu_moderate, weighted_norm, Weight};

/// Tail estimates above this mark an output entry as unreliable.
pub const TAIL_FLAG: f64 = 1e-8;
/// Boxes with at least this many entries per axis are convolved by FFT.
pub const FFT_SIDE: usize = 64;

/// Truncated convolution with its error accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convolution {
    pub coeffs: CoeffArray,
    /// Per-entry estimate of the contribution of indices outside the input
    /// boxes, in the layout of `coeffs`.
    pub tail: Vec<f64>,
    /// Largest `r` such that no entry with `|n|_inf <= r` is flagged; `None`
    /// when the zero mode itself is flagged.
    pub reliable_radius: Option<usize>,
    pub flagged: usize,
}

/// `f_n = sum_j f1_{n-j} f2_j` over the available indices, for `|n_j| <= n_out`.
///
/// Missing terms are estimated by the largest boundary-layer magnitude of one
/// factor times the `l^1` mass of the other factor that pairs with indices
/// outside the first box.
pub fn coeff_convolution(f1: &CoeffArray, f2: &CoeffArray, n_out: usize) -> Result<Convolution> {
    if f1.dim() != f2.dim() {
        return Err(Error::DimensionMismatch { expected: f1.dim(), got: f2.dim() });
    }
    let coeffs = if f1.side().max(f2.side()) >= FFT_SIDE {
        convolve_fft(f1, f2, n_out)?
    } else {
        convolve_direct(f1, f2, n_out)?
    };
    let tail = tail_bound(f1, f2, n_out);
    let mut flagged = 0;
    let mut first_bad: Option<usize> = None;
    for (i, t) in tail.iter().enumerate() {
        if *t > TAIL_FLAG {
            flagged += 1;
            let n = coeffs.index_of(i);
            let r = n.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0);
            first_bad = Some(first_bad.map_or(r, |b| b.min(r)));
        }
    }
    let reliable_radius = match first_bad {
        None => Some(n_out),
        Some(0) => None,
        Some(r) => Some(r - 1),
    };
    Ok(Convolution { coeffs, tail, reliable_radius, flagged })
}

/// Direct double sum; exact up to floating-point summation.
pub fn convolve_direct(f1: &CoeffArray, f2: &CoeffArray, n_out: usize) -> Result<CoeffArray> {
    if f1.dim() != f2.dim() {
        return Err(Error::DimensionMismatch { expected: f1.dim(), got: f2.dim() });
    }
    let d = f1.dim();
    let side = 2 * n_out + 1;
    let nz: Vec<(usize, Complex64)> =
        f2.values().iter().enumerate().filter(|(_, v)| v.norm() != 0.0).map(|(i, v)| (i, *v)).collect();
    let data: Vec<Complex64> = (0..side.pow(d as u32))
        .into_par_iter()
        .map(|flat| {
            let n = unravel(flat, d, n_out);
            let mut acc = Complex64::default();
            for (i, v) in &nz {
                let j = f2.index_of(*i);
                let k = [n[0] - j[0], n[1] - j[1], n[2] - j[2]];
                if let Some(a) = f1.get(&k[..d]) {
                    acc += a * v;
                }
            }
            acc
        })
        .collect();
    CoeffArray::new(d, n_out, data, CoeffSource::Product)
}

/// Zero-padded FFT convolution (exact linear convolution of the two boxes).
pub fn convolve_fft(f1: &CoeffArray, f2: &CoeffArray, n_out: usize) -> Result<CoeffArray> {
    if f1.dim() != f2.dim() {
        return Err(Error::DimensionMismatch { expected: f1.dim(), got: f2.dim() });
    }
    let d = f1.dim();
    let (r1, r2) = (f1.n_max(), f2.n_max());
    let len = (2 * (r1 + r2) + 1).next_power_of_two();
    let pad = |f: &CoeffArray| {
        let mut buf = vec![Complex64::default(); len.pow(d as u32)];
        let r = f.n_max() as i64;
        for (i, v) in f.values().iter().enumerate() {
            let n = f.index_of(i);
            let mut flat = 0usize;
            for nj in &n[..d] {
                flat = flat * len + (nj + r) as usize;
            }
            buf[flat] = *v;
        }
        fft::forward(&mut buf, d, len);
        buf
    };
    let (mut a, b) = rayon::join(|| pad(f1), || pad(f2));
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft::inverse(&mut a, d, len);
    let scale = 1.0 / (len.pow(d as u32)) as f64;
    let offset = (r1 + r2) as i64;
    let out = CoeffArray::from_fn(d, n_out, |n| {
        if n.iter().any(|v| v.abs() > offset) {
            return Complex64::default();
        }
        let mut flat = 0usize;
        for nj in n {
            flat = flat * len + (nj + offset) as usize;
        }
        a[flat] * scale
    })?;
    Ok(out.with_source(CoeffSource::Product))
}

/// Largest magnitude on the outermost layer `|n|_inf = N_max`.
fn boundary_magnitude(f: &CoeffArray) -> f64 {
    let r = f.n_max() as i64;
    f.iter()
        .filter(|(n, _)| n[..f.dim()].iter().any(|v| v.abs() == r))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
}

/// Summed-area table of `|f|` over its box for rectangular range sums.
struct BoxSums {
    dim: usize,
    n_max: i64,
    len: usize,
    table: Vec<f64>,
}

impl BoxSums {
    fn new(f: &CoeffArray) -> Self {
        let d = f.dim();
        let side = f.side();
        let len = side + 1;
        let mut table = vec![0.0; len.pow(d as u32)];
        let stride = |axis: usize| len.pow((d - 1 - axis) as u32);
        for (i, v) in f.values().iter().enumerate() {
            let n = f.index_of(i);
            let mut flat = 0usize;
            for nj in &n[..d] {
                flat = flat * len + (nj + f.n_max() as i64 + 1) as usize;
            }
            table[flat] = v.norm();
        }
        for axis in 0..d {
            let s = stride(axis);
            for flat in 0..table.len() {
                if (flat / s) % len != 0 {
                    table[flat] += table[flat - s];
                }
            }
        }
        BoxSums { dim: d, n_max: f.n_max() as i64, len, table }
    }

    /// Sum of `|f_j|` over `lo_i <= j_i <= hi_i` intersected with the box.
    fn sum(&self, lo: &[i64], hi: &[i64]) -> f64 {
        let d = self.dim;
        let mut a = [0usize; 3];
        let mut b = [0usize; 3];
        for i in 0..d {
            let l = lo[i].max(-self.n_max);
            let h = hi[i].min(self.n_max);
            if l > h {
                return 0.0;
            }
            a[i] = (l + self.n_max) as usize;
            b[i] = (h + self.n_max + 1) as usize;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut flat = 0usize;
            let mut sign = 1.0;
            for i in 0..d {
                let idx = if corner >> i & 1 == 1 {
                    sign = -sign;
                    a[i]
                } else {
                    b[i]
                };
                flat = flat * self.len + idx;
            }
            total += sign * self.table[flat];
        }
        total
    }

    fn total(&self) -> f64 {
        let r = [self.n_max; 3];
        let l = [-self.n_max; 3];
        self.sum(&l[..self.dim], &r[..self.dim])
    }
}

fn tail_bound(f1: &CoeffArray, f2: &CoeffArray, n_out: usize) -> Vec<f64> {
    let d = f1.dim();
    let (b1, b2) = (boundary_magnitude(f1), boundary_magnitude(f2));
    let (s1, s2) = (BoxSums::new(f1), BoxSums::new(f2));
    let (t1, t2) = (s1.total(), s2.total());
    let (r1, r2) = (f1.n_max() as i64, f2.n_max() as i64);
    let side = 2 * n_out + 1;
    (0..side.pow(d as u32))
        .into_par_iter()
        .map(|flat| {
            let n = unravel(flat, d, n_out);
            let mut lo = [0i64; 3];
            let mut hi = [0i64; 3];
            // f2 mass at j with n - j inside box 1
            for i in 0..d {
                lo[i] = n[i] - r1;
                hi[i] = n[i] + r1;
            }
            let miss2 = (t2 - s2.sum(&lo[..d], &hi[..d])).max(0.0);
            for i in 0..d {
                lo[i] = n[i] - r2;
                hi[i] = n[i] + r2;
            }
            let miss1 = (t1 - s1.sum(&lo[..d], &hi[..d])).max(0.0);
            b1 * miss2 + b2 * miss1
        })
        .collect()
}

/// The `q` with `1/q1 + 1/q2 = 1/q + 1`, if it is at least 1.
pub fn young_exponent(q1: f64, q2: f64) -> Result<f64> {
    if !(q1 >= 1.0 && q2 >= 1.0) {
        return Err(Error::YoungExponents { q1, q2 });
    }
    let inv = 1.0 / q1 + 1.0 / q2 - 1.0;
    if inv < -1e-15 {
        return Err(Error::YoungExponents { q1, q2 });
    }
    Ok(if inv <= 1e-15 { f64::INFINITY } else { 1.0 / inv })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungNorms {
    pub q1: f64,
    pub q2: f64,
    pub q: f64,
    /// `||f1||` with weight `omega`, exponent `q1`.
    pub f1_norm: f64,
    /// `||f2||` with weight `nu`, exponent `q2`.
    pub f2_norm: f64,
    /// `||f1 f2||` with weight `omega`, exponent `q`.
    pub product_norm: f64,
    /// Moderateness constant of `(omega, nu)` over the input radius.
    pub constant: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductReport {
    pub coeffs: CoeffArray,
    pub reliable_radius: Option<usize>,
    pub flagged: usize,
    pub max_tail: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norms: Option<YoungNorms>,
}

impl ProductReport {
    fn from_convolution(conv: Convolution, norms: Option<YoungNorms>) -> Self {
        let max_tail = conv.tail.iter().copied().fold(0.0, f64::max);
        ProductReport {
            coeffs: conv.coeffs,
            reliable_radius: conv.reliable_radius,
            flagged: conv.flagged,
            max_tail,
            norms,
        }
    }
}

/// Verifies `||f1 f2||_{q,omega} <= C ||f1||_{q1,omega} ||f2||_{q2,nu}` on the
/// full (untruncated) product of the two boxes.
pub fn young_bound_check(
    f1: &CoeffArray,
    f2: &CoeffArray,
    omega: &Weight,
    nu: &Weight,
    q1: f64,
    q2: f64,
) -> Result<ProductReport> {
    let q = young_exponent(q1, q2)?;
    if f1.dim() != f2.dim() {
        return Err(Error::DimensionMismatch { expected: f1.dim(), got: f2.dim() });
    }
    let moderate = is_nu_moderate(omega, nu, f1.dim(), f1.n_max().max(f2.n_max()).max(1))?;
    let conv = coeff_convolution(f1, f2, f1.n_max() + f2.n_max())?;
    let f1_norm = weighted_norm(f1, omega, q1)?;
    let f2_norm = weighted_norm(f2, nu, q2)?;
    let product_norm = weighted_norm(&conv.coeffs, omega, q)?;
    let bound = moderate.constant * f1_norm * f2_norm;
    let norms = YoungNorms {
        q1,
        q2,
        q,
        f1_norm,
        f2_norm,
        product_norm,
        constant: moderate.constant,
        bound,
        holds: product_norm <= bound * (1.0 + 1e-12),
    };
    Ok(ProductReport::from_convolution(conv, Some(norms)))
}

/// Rejects Sobolev index triples outside `s1 + s2 >= 0`, `s <= min(s1, s2)`.
pub fn sobolev_index_gate(s1: f64, s2: f64, s: f64) -> Result<()> {
    if s1 + s2 < 0.0 || s > s1.min(s2) {
        return Err(Error::SobolevIndices { s1, s2, s });
    }
    Ok(())
}

/// Product bound for Sobolev-type weights: `f1` measured with `<n>^{s}`, `f2`
/// with `<n>^{|s|}`, after the index gate for `(s1, s2, s)`.
pub fn sobolev_product_check(
    f1: &CoeffArray,
    f2: &CoeffArray,
    s1: f64,
    s2: f64,
    s: f64,
    q1: f64,
    q2: f64,
) -> Result<ProductReport> {
    sobolev_index_gate(s1, s2, s)?;
    young_bound_check(f1, f2, &Weight::polynomial(s), &Weight::polynomial(s.abs()), q1, q2)
}

/// Coefficients of `(window f1)_p (window f2)_p` on `|n_j| <= n_max`. On the
/// window plateau this agrees with `f1 f2`.
pub fn local_product(
    f1: &Input,
    f2: &Input,
    x0: &[f64],
    window: &CutoffWindow,
    n_max: usize,
) -> Result<ProductReport> {
    if f1.dim() != f2.dim() || f1.dim() != window.dim() {
        return Err(Error::DimensionMismatch { expected: window.dim(), got: f1.dim().max(f2.dim()) });
    }
    if x0.len() != window.dim() || !window.in_plateau(x0) {
        return Err(Error::Window(format!("point {x0:?} is not on the window plateau")));
    }
    let (a, b) = rayon::join(|| f1.localized(window, n_max), || f2.localized(window, n_max));
    let conv = coeff_convolution(&a?, &b?, n_max)?;
    Ok(ProductReport::from_convolution(conv, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_at(dim: usize, n_max: usize, k: &[i64]) -> CoeffArray {
        CoeffArray::from_fn(dim, n_max, |n| if n == k { 1.0.into() } else { 0.0.into() }).unwrap()
    }

    #[test]
    fn exponentials_multiply() {
        let e1 = unit_at(1, 4, &[1]);
        let e2 = unit_at(1, 4, &[2]);
        let p = coeff_convolution(&e1, &e2, 4).unwrap();
        assert_eq!(p.coeffs.get(&[3]).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(p.coeffs.values().iter().filter(|v| v.norm() != 0.0).count(), 1);
        let one = unit_at(2, 3, &[0, 0]);
        let q = coeff_convolution(&one, &one, 3).unwrap();
        assert_eq!(q.coeffs, unit_at(2, 3, &[0, 0]).with_source(CoeffSource::Product));
        assert_eq!(q.reliable_radius, Some(3));
    }

    #[test]
    fn fft_and_direct_agree() {
        let f = CoeffArray::from_fn(2, 40, |n| Complex64::new((n[0] as f64).cos(), (n[1] as f64 * 0.3).sin()))
            .unwrap();
        let g = CoeffArray::from_fn(2, 7, |n| Complex64::new(1.0 / (1.0 + (n[0] * n[1]).abs() as f64), 0.5))
            .unwrap();
        let a = convolve_direct(&f, &g, 30).unwrap();
        let b = convolve_fft(&f, &g, 30).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn tail_flags_outer_entries() {
        // constant sequences have large boundary values: entries near the
        // edge of the output box miss mass and get flagged; only n = 0 is complete
        let f = CoeffArray::from_fn(1, 10, |_| 1.0.into()).unwrap();
        let p = coeff_convolution(&f, &f, 10).unwrap();
        assert!(p.flagged > 0);
        assert_eq!(p.reliable_radius, Some(0));
        let decaying = CoeffArray::from_fn(1, 40, |n| (-(n[0] as f64).abs()).exp().into()).unwrap();
        let q = coeff_convolution(&decaying, &decaying, 10).unwrap();
        assert_eq!(q.flagged, 0);
        assert_eq!(q.reliable_radius, Some(10));
    }

    #[test]
    fn exponent_relation() {
        assert_eq!(young_exponent(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(young_exponent(1.0, 2.0).unwrap(), 2.0);
        assert!(young_exponent(2.0, 2.0).unwrap().is_infinite());
        assert!(young_exponent(1.5, 1.5).is_ok());
        assert!(young_exponent(0.5, 1.0).is_err());
    }

    #[test]
    fn sobolev_gate() {
        assert!(sobolev_index_gate(1.0, -1.0, -1.0).is_ok());
        assert!(sobolev_index_gate(1.0, -2.0, -2.0).is_err());
        assert!(sobolev_index_gate(1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn delta_young_bound() {
        let one = unit_at(1, 2, &[0]);
        let r = young_bound_check(&one, &one, &Weight::one(), &Weight::one(), 1.0, 1.0).unwrap();
        let n = r.norms.unwrap();
        assert!(n.holds);
        assert_eq!(n.product_norm, 1.0);
    }
}
