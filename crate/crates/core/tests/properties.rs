use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use microlocal::algebra::{convolve_direct, convolve_fft};
use microlocal::coeffs::{fourier_coefficients, synthesize, CoeffArray};
use microlocal::cones::{angle_between, lattice_points_in_cone, separation_constant, Cone};
use microlocal::grid::{periodize, sample, CutoffWindow, Grid, SampledField};
use microlocal::spaces::{japanese, Weight};

fn max_diff(a: &CoeffArray, b: &CoeffArray) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn coeffs(dim: usize, n_max: usize) -> impl Strategy<Value = CoeffArray> {
    let len = (2 * n_max + 1).pow(dim as u32);
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len).prop_map(move |v| {
        let data = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        CoeffArray::new(dim, n_max, data, microlocal::coeffs::CoeffSource::Explicit).unwrap()
    })
}

fn real_field(dim: usize, m: usize) -> impl Strategy<Value = SampledField> {
    prop::collection::vec(-1.0..1.0f64, m.pow(dim as u32)).prop_map(move |v| {
        let grid = Grid::new(dim, m).unwrap();
        SampledField::new(grid, v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn synthesis_round_trip(c in (1usize..=2).prop_flat_map(|d| coeffs(d, 6))) {
        let grid = Grid::new(c.dim(), 32).unwrap();
        let back = fourier_coefficients(&synthesize(&c, &grid).unwrap(), 6).unwrap();
        prop_assert!(max_diff(&c, &back) < 1e-12);
    }

    #[test]
    fn real_fields_have_hermitian_coefficients(f in (1usize..=2).prop_flat_map(|d| real_field(d, 16))) {
        let c = fourier_coefficients(&f, 7).unwrap();
        prop_assert!(c.hermitian_defect() < 1e-13);
    }

    #[test]
    fn parseval_bounds_the_box_energy(f in real_field(1, 64)) {
        let c = fourier_coefficients(&f, 20).unwrap();
        let box_energy: f64 = c.values().iter().map(|v| v.norm_sqr()).sum();
        let total: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / 64.0;
        prop_assert!(box_energy <= total * (1.0 + 1e-12));
    }

    #[test]
    fn convolution_commutes(a in coeffs(2, 3), b in coeffs(2, 4)) {
        let ab = convolve_direct(&a, &b, 5).unwrap();
        let ba = convolve_direct(&b, &a, 5).unwrap();
        prop_assert!(max_diff(&ab, &ba) < 1e-12);
        prop_assert!(max_diff(&ab, &convolve_fft(&a, &b, 5).unwrap()) < 1e-10);
    }

    #[test]
    fn convolution_is_bilinear(a in coeffs(1, 5), b in coeffs(1, 5), c in coeffs(1, 5), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let alpha = Complex64::new(re, im);
        let mut combo = a.clone();
        for (x, y) in combo.values_mut().iter_mut().zip(b.values()) {
            *x = alpha * *x + y;
        }
        let lhs = convolve_direct(&combo, &c, 8).unwrap();
        let mut rhs = convolve_direct(&a, &c, 8).unwrap();
        rhs.scale(alpha);
        let bc = convolve_direct(&b, &c, 8).unwrap();
        for (x, y) in rhs.values_mut().iter_mut().zip(bc.values()) {
            *x += y;
        }
        prop_assert!(max_diff(&lhs, &rhs) < 1e-11);
    }

    #[test]
    fn peetre_inequality(
        s in -4.0..4.0f64,
        m in prop::collection::vec(-200i64..200, 2),
        n in prop::collection::vec(-200i64..200, 2),
    ) {
        let sum: Vec<i64> = m.iter().zip(&n).map(|(a, b)| a + b).collect();
        let lhs = japanese(&sum).powf(s);
        let rhs = 2f64.powf(s.abs() / 2.0) * japanese(&m).powf(s) * japanese(&n).powf(s.abs());
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        let w = Weight::polynomial(s);
        prop_assert!((w.eval(&m) - japanese(&m).powf(s)).abs() <= 1e-12 * w.eval(&m));
    }

    #[test]
    fn shrinking_a_cone_keeps_its_points(
        angle in 0.0..(2.0 * PI),
        half in 5.0..60.0f64,
        lo in 0.2..0.9f64,
        hi_extra in 0.0..0.1f64,
    ) {
        let outer = Cone::from_degrees(&[angle.cos(), angle.sin()], half).unwrap();
        let mid = outer.shrink(lo + hi_extra).unwrap();
        let inner = outer.shrink(lo).unwrap();
        let pts = |c: &Cone| lattice_points_in_cone(c, 1.0, 24.0).unwrap();
        let (po, pm) = (pts(&outer), pts(&mid));
        for p in pts(&inner) {
            prop_assert!(pm.contains(&p));
        }
        for p in &pm {
            prop_assert!(po.contains(p));
        }
    }

    #[test]
    fn separation_constant_keeps_perturbations_inside(
        angle in 0.0..(2.0 * PI),
        tilt in -8.0..8.0f64,
        t in -1.0..1.0f64,
        scale in 0.1..10.0f64,
        dir in 0.0..(2.0 * PI),
    ) {
        let outer = Cone::from_degrees(&[angle.cos(), angle.sin()], 30.0).unwrap();
        let b = angle + tilt.to_radians();
        let inner = Cone::from_degrees(&[b.cos(), b.sin()], 15.0).unwrap();
        let c = separation_constant(&inner, &outer).unwrap();
        prop_assert!(c > 0.0 && c < 1.0);
        // a point of the inner cone and a perturbation of relative size < c
        let a = b + t * inner.half_angle();
        let xi = [scale * a.cos(), scale * a.sin()];
        let r = 0.999 * c * scale;
        let y = [xi[0] + r * dir.cos(), xi[1] + r * dir.sin()];
        prop_assert!(angle_between(&y, outer.axis()) < outer.half_angle());
    }

    #[test]
    fn periodization_commutes_with_grid_translation(shift in 0usize..64, f in real_field(1, 64), c in 0.3..0.7f64) {
        let grid = Grid::new(1, 64).unwrap();
        let w = CutoffWindow::new(&[c], 0.05, 0.25).unwrap();
        let tau = shift as f64 / 64.0;
        let moved = SampledField::new(grid, (0..64).map(|k| f.values()[(k + 64 - shift) % 64]).collect()).unwrap();
        let w_moved = w.recentered(&[c + tau]).unwrap();
        let a = fourier_coefficients(&periodize(&f, &w).unwrap(), 20).unwrap();
        let b = fourier_coefficients(&periodize(&moved, &w_moved).unwrap(), 20).unwrap();
        for (n, v) in a.iter() {
            let phase = Complex64::from_polar(1.0, -2.0 * PI * n[0] as f64 * tau);
            prop_assert!((b.get(&n[..1]).unwrap() - v * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn modulation_shifts_coefficients(k in -3i64..=3, m in -4i64..=4) {
        let grid = Grid::new(1, 32).unwrap();
        let f = sample(|x| Complex64::new((2.0 * PI * x[0]).cos() + (2.0 * PI * k as f64 * x[0]).sin(), 0.0), &grid).unwrap();
        let g = sample(|x| {
            let base = (2.0 * PI * x[0]).cos() + (2.0 * PI * k as f64 * x[0]).sin();
            Complex64::from_polar(1.0, 2.0 * PI * m as f64 * x[0]) * base
        }, &grid).unwrap();
        let a = fourier_coefficients(&f, 15).unwrap();
        let b = fourier_coefficients(&g, 15).unwrap();
        prop_assert!(max_diff(&a.modulate(&[m]).unwrap(), &b) < 1e-12);
    }
}
