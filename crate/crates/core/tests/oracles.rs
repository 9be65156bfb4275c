use std::f64::consts::PI;

use num_complex::Complex64;

use microlocal::coeffs::{analytic_coeffs, fourier_coefficients, synthesize, CoeffArray, Input, TestDistribution};
use microlocal::grid::{periodize, wrap, CutoffWindow, Grid};
use microlocal::testcases::{catalog, generate, periodic_coeffs, Fiber, Generated, OracleCase, Target};

fn max_diff(a: &CoeffArray, b: &CoeffArray) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `int_a^b e^{-2 pi i n x} dx`.
fn exp_integral(n: i64, a: f64, b: f64) -> Complex64 {
    if n == 0 {
        return Complex64::new(b - a, 0.0);
    }
    let w = -2.0 * PI * n as f64;
    (Complex64::from_polar(1.0, w * b) - Complex64::from_polar(1.0, w * a)) / Complex64::new(0.0, w)
}

#[test]
fn periodic_delta_alternates() {
    let c = periodic_coeffs(&TestDistribution::delta(&[0.5]), 16).unwrap();
    for (n, v) in c.iter() {
        assert_eq!(v, Complex64::new(if n[0] % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
    }
}

#[test]
fn periodic_square_wave_matches_piecewise_integration() {
    // +1 on [x0, x0 + 1/2), -1 on the other half period
    for x0 in [0.5, 0.3] {
        let c = periodic_coeffs(&TestDistribution::square_wave(x0), 40).unwrap();
        for (n, v) in c.iter() {
            let n = n[0];
            let expect = exp_integral(n, x0, x0 + 0.5) - exp_integral(n, x0 + 0.5, x0 + 1.0);
            assert!((v - expect).norm() < 1e-14, "x0 = {x0}, n = {n}: {v} vs {expect}");
        }
    }
}

#[test]
fn periodic_kink_matches_sampled_triangle_wave() {
    // distance to the nearest image of x0; aliasing of the DFT is O(M^-2)
    let m = 1 << 14;
    let grid = Grid::new(1, m).unwrap();
    let f = microlocal::grid::sample(|x| Complex64::new(wrap(x[0] - 0.5).abs(), 0.0), &grid).unwrap();
    let dft = fourier_coefficients(&f, 32).unwrap();
    let exact = periodic_coeffs(&TestDistribution::kink(0.5), 32).unwrap();
    assert!(max_diff(&dft, &exact) < 1e-8);
    assert_eq!(exact.get(&[0]).unwrap(), Complex64::new(0.25, 0.0));
}

#[test]
fn periodic_plane_wave_is_a_single_mode() {
    let c = periodic_coeffs(&TestDistribution::plane_wave(&[3, -2]), 5).unwrap();
    for (n, v) in c.iter() {
        let expect = if n[..2] == [3, -2] { 1.0 } else { 0.0 };
        assert_eq!(v, Complex64::new(expect, 0.0));
    }
}

#[test]
fn tilted_edge_is_stable_across_refinement() {
    let d = TestDistribution::halfplane_edge([0.5, 0.5], [1.0, 1.0]).unwrap();
    let w = CutoffWindow::new(&[0.5, 0.5], 0.05, 0.25).unwrap();
    let coarse = analytic_coeffs(&d, &w, 128).unwrap();
    let fine = analytic_coeffs(&d, &w, 256).unwrap().truncate(128).unwrap();
    assert!(max_diff(&coarse, &fine) < 1e-10);
}

#[test]
fn smooth_oracles_agree_with_sampled_fields() {
    let w = CutoffWindow::new(&[0.5, 0.5], 0.05, 0.25).unwrap();
    let grid = Grid::new(2, 256).unwrap();
    for dist in [TestDistribution::gaussian(&[0.5, 0.5], 0.05), TestDistribution::plane_wave(&[3, -2])] {
        let analytic = analytic_coeffs(&dist, &w, 24).unwrap();
        let sampled = fourier_coefficients(&periodize(&dist.sample(&grid).unwrap(), &w).unwrap(), 24).unwrap();
        assert!(max_diff(&analytic, &sampled) < 1e-10, "{}", dist.name());
    }
}

#[test]
fn windowed_kink_agrees_with_a_fine_sampled_field() {
    let w = CutoffWindow::new(&[0.5], 0.05, 0.25).unwrap();
    let dist = TestDistribution::kink(0.5);
    let analytic = analytic_coeffs(&dist, &w, 32).unwrap();
    let field = dist.sample(&Grid::new(1, 1 << 15).unwrap()).unwrap();
    let sampled = fourier_coefficients(&periodize(&field, &w).unwrap(), 32).unwrap();
    assert!(max_diff(&analytic, &sampled) < 1e-8);
}

#[test]
fn analytic_modulation_is_a_shift() {
    let w = CutoffWindow::new(&[0.5], 0.05, 0.25).unwrap();
    let base = analytic_coeffs(&TestDistribution::square_wave(0.5), &w, 40).unwrap();
    let moved = analytic_coeffs(&TestDistribution::square_wave(0.5).modulated(&[3]), &w, 32).unwrap();
    for (n, v) in moved.iter() {
        assert!((v - base.get(&[n[0] - 3]).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn localized_oracles_round_trip_through_synthesis() {
    for case in catalog().unwrap() {
        let d = case.dim();
        let x0 = vec![0.5; d];
        let w = CutoffWindow::new(&x0, if d == 1 { 0.05 } else { 0.01 }, 0.25).unwrap();
        let n_max = 16;
        let Generated::Coeffs(c) = generate(&case, &Target::Localized { n_max, window: w }).unwrap() else {
            panic!("coefficients expected");
        };
        let grid = Grid::new(d, 64).unwrap();
        let again = fourier_coefficients(&synthesize(&c, &grid).unwrap(), n_max).unwrap();
        let scale = c.max_abs().max(1.0);
        assert!(max_diff(&c, &again) / scale < 1e-10, "{}", case.name);
    }
}

#[test]
fn every_case_has_truth_at_the_centre() {
    for case in catalog().unwrap() {
        assert!(!case.justification.is_empty());
        let truth = case.truth_at(&vec![0.5; case.dim()]).unwrap().expect("truth at the centre");
        match &truth.fiber {
            Fiber::Empty => assert!(case.name.starts_with("gaussian") || case.name.starts_with("plane_wave"), "{}", case.name),
            Fiber::All => assert!(["delta", "square_wave", "kink"].contains(&case.name.as_str()), "{}", case.name),
            f @ Fiber::Conormal { normal } => {
                let minus: Vec<f64> = normal.iter().map(|v| -v).collect();
                let tangent = [-normal[1], normal[0]];
                assert!(f.contains(normal, 1e-12) && f.contains(&minus, 1e-12));
                assert!(!f.contains(&tangent, 1e-3));
            }
        }
    }
}

#[test]
fn truth_away_from_the_singular_support_is_empty() {
    let edge = OracleCase::halfplane_edge([1.0, 0.0]).unwrap();
    let t = edge.truth_at(&[0.3, 0.5]).unwrap().unwrap();
    assert_eq!(t.fiber, Fiber::Empty);
    let kink = OracleCase::kink().unwrap();
    assert_eq!(kink.truth_at(&[0.2]).unwrap().unwrap().fiber, Fiber::Empty);
    // the image of the kink at x0 + 1/2 is also singular
    assert_eq!(kink.truth_at(&[0.0]).unwrap().unwrap().fiber, Fiber::All);
    let jump = OracleCase::square_wave().unwrap();
    assert_eq!(jump.truth_at(&[0.5]).unwrap().unwrap().sobolev_order, Some(0.5));
}

#[test]
fn sampled_and_analytic_inputs_localize_alike() {
    let dist = TestDistribution::gaussian(&[0.4], 0.03);
    let w = CutoffWindow::new(&[0.45], 0.05, 0.25).unwrap();
    let field = Input::Field(dist.sample(&Grid::new(1, 512).unwrap()).unwrap());
    let analytic = Input::Analytic(dist);
    let a = field.localized(&w, 32).unwrap();
    let b = analytic.localized(&w, 32).unwrap();
    assert!(max_diff(&a, &b) < 1e-10);
}
