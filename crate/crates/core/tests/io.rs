use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use microlocal::coeffs::CoeffArray;
use microlocal::grid::{Grid, SampledField};
use microlocal::io::{
    read_coeffs_bin, read_coeffs_csv, read_field, to_json, write_coeffs_bin, write_coeffs_csv, write_field, DataFormat,
};

fn random_field(rng: &mut ChaCha8Rng, dim: usize, m: usize, real: bool) -> SampledField {
    let grid = Grid::new(dim, m).unwrap();
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.gen_range(-1e3..1e3), if real { 0.0 } else { rng.gen_range(-1.0..1.0) }))
        .collect();
    SampledField::new(grid, values).unwrap()
}

#[test]
fn fields_round_trip_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dir = tempfile::tempdir().unwrap();
    for (dim, m, format, real) in [
        (1, 64, DataFormat::Csv, true),
        (1, 32, DataFormat::Csv, false),
        (2, 16, DataFormat::Binary, false),
        (3, 8, DataFormat::Binary, true),
    ] {
        let f = random_field(&mut rng, dim, m, real).with_meta("round trip");
        let path = dir.path().join(format!("f{dim}_{m}.json"));
        write_field(&f, &path, format).unwrap();
        let g = read_field(&path).unwrap();
        assert_eq!(g.grid(), f.grid());
        assert_eq!(g.values(), f.values(), "d={dim} M={m} {format:?}");
        assert_eq!(g.meta(), Some("round trip"));
    }
}

#[test]
fn coefficients_round_trip_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dir = tempfile::tempdir().unwrap();
    for dim in 1..=3 {
        let c = CoeffArray::from_fn(dim, 3, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen::<f64>() * 1e-300))
            .unwrap();
        let csv = dir.path().join(format!("c{dim}.csv"));
        write_coeffs_csv(&c, &csv).unwrap();
        assert_eq!(read_coeffs_csv(&csv).unwrap().values(), c.values());
        let bin = dir.path().join(format!("c{dim}.json"));
        write_coeffs_bin(&c, &bin).unwrap();
        let back = read_coeffs_bin(&bin).unwrap();
        assert_eq!(back.values(), c.values());
        assert_eq!(back.source(), c.source());
    }
}

#[test]
fn malformed_inputs_are_reported_with_their_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("short.csv");
    std::fs::write(&p, "n1,re,im\n0,1,0\n1,2,0\n").unwrap();
    let e = read_coeffs_csv(&p).unwrap_err().to_string();
    assert!(e.contains("short.csv") && e.contains("full box"), "{e}");

    let p = dir.path().join("f.json");
    std::fs::write(&p, r#"{"d": 1, "M": 8, "data": "nowhere.bin"}"#).unwrap();
    let e = read_field(&p).unwrap_err().to_string();
    assert!(e.contains("nowhere.bin"), "{e}");

    std::fs::write(dir.path().join("odd.bin"), [0u8; 20]).unwrap();
    std::fs::write(&p, r#"{"d": 1, "M": 8, "data": "odd.bin"}"#).unwrap();
    let e = read_field(&p).unwrap_err().to_string();
    assert!(e.contains("whole number"), "{e}");
}

#[test]
fn json_floats_are_fixed_width_and_non_finite_is_null() {
    #[derive(serde::Serialize)]
    struct Row {
        a: f64,
        b: f64,
        c: f64,
    }
    let text = to_json(&Row { a: 0.1, b: f64::INFINITY, c: -2.0 }).unwrap();
    assert_eq!(text, "{\n  \"a\": 1.0000000000000001e-1,\n  \"b\": null,\n  \"c\": -2.0000000000000000e0\n}\n");
}
