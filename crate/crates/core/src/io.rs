//! Field manifests, coefficient files and deterministic JSON.
//!
//! A field manifest is a JSON object `{d, M, data, format}` pointing at a
//! data file relative to the manifest: little-endian interleaved `(re, im)`
//! f64 pairs in row-major order, or for `d = 1` a CSV with one or two
//! columns. Coefficient arrays are written as CSV rows `(n_1..n_d, re, im)`
//! or as a JSON header plus a binary body in the same float layout.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoeffArray, CoeffSource};
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledField};
use crate::wavefront::WavefrontReport;

/// Writes floats with 17 significant digits so equal values always print
/// identically and round-trip exactly.
struct FixedFloats<F>(F);

impl<F: serde_json::ser::Formatter> serde_json::ser::Formatter for FixedFloats<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn file_err(path: &Path, e: std::io::Error) -> Error {
    Error::File { path: path.display().to_string(), source: e }
}

/// `fs::read_to_string` with the path in the error.
pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| file_err(path, e))
}

/// `fs::write` with the path in the error.
pub fn write_file(path: impl AsRef<Path>, data: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, data).map_err(|e| file_err(path, e))
}

/// Pretty JSON with fixed key order (struct order; maps are sorted) and
/// 17-significant-digit floats. Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = FixedFloats(serde_json::ser::PrettyFormatter::with_indent(b"  "));
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_file(path, to_json(value)?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    #[default]
    Binary,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldManifest {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// Data file, relative to the manifest's directory.
    pub data: String,
    #[serde(default)]
    pub format: DataFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<String>,
}

fn format_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {msg}", path.display()))
}

fn data_path(manifest: &Path, data: &str) -> PathBuf {
    manifest.parent().unwrap_or(Path::new(".")).join(data)
}

fn read_f64_pairs(path: &Path) -> Result<Vec<Complex64>> {
    let bytes = fs::read(path).map_err(|e| file_err(path, e))?;
    if bytes.len() % 16 != 0 {
        return Err(format_err(path, format!("{} bytes is not a whole number of (re, im) pairs", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

fn write_f64_pairs(path: &Path, values: &[Complex64]) -> Result<()> {
    let mut out = Vec::with_capacity(values.len() * 16);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    write_file(path, out)?;
    Ok(())
}

/// One or two numeric columns; a non-numeric first row is taken as a header.
fn read_csv_column(path: &Path) -> Result<Vec<Complex64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path)
        .map_err(|e| format_err(path, e))?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.len() == 1 => out.push(Complex64::new(v[0], 0.0)),
            Ok(v) if v.len() == 2 => out.push(Complex64::new(v[0], v[1])),
            Ok(v) => return Err(format_err(path, format!("row {}: expected 1 or 2 columns, got {}", row + 1, v.len()))),
            Err(_) if row == 0 => continue,
            Err(e) => return Err(format_err(path, format!("row {}: {e}", row + 1))),
        }
    }
    Ok(out)
}

/// Loads a field from its manifest.
pub fn read_field(manifest_path: &Path) -> Result<SampledField> {
    let text = read_text(manifest_path)?;
    let man: FieldManifest = serde_json::from_str(&text).map_err(|e| format_err(manifest_path, e))?;
    let grid = Grid::new(man.d, man.m)?;
    let path = data_path(manifest_path, &man.data);
    let values = match man.format {
        DataFormat::Binary => read_f64_pairs(&path)?,
        DataFormat::Csv if man.d == 1 => read_csv_column(&path)?,
        DataFormat::Csv => return Err(format_err(manifest_path, "CSV data is only accepted for d = 1")),
    };
    if values.len() != grid.len() {
        return Err(format_err(&path, format!("expected M^d = {} samples, found {}", grid.len(), values.len())));
    }
    let field = SampledField::new(grid, values)?;
    Ok(match man.meta {
        Some(m) => field.with_meta(m),
        None => field,
    })
}

/// Writes `field` as a manifest plus a data file next to it named after the
/// manifest stem.
pub fn write_field(field: &SampledField, manifest_path: &Path, format: DataFormat) -> Result<()> {
    let grid = field.grid();
    if format == DataFormat::Csv && grid.dim() != 1 {
        return Err(Error::Format("CSV data is only written for d = 1".into()));
    }
    let stem = manifest_path.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    let data = format!("{stem}.{}", if format == DataFormat::Csv { "csv" } else { "bin" });
    let path = data_path(manifest_path, &data);
    match format {
        DataFormat::Binary => write_f64_pairs(&path, field.values())?,
        DataFormat::Csv => {
            let mut w = csv::Writer::from_path(&path).map_err(|e| format_err(&path, e))?;
            w.write_record(["re", "im"]).map_err(|e| format_err(&path, e))?;
            for v in field.values() {
                w.write_record([format!("{:.16e}", v.re), format!("{:.16e}", v.im)]).map_err(|e| format_err(&path, e))?;
            }
            w.flush()?;
        }
    }
    let man = FieldManifest { d: grid.dim(), m: grid.m(), data, format, meta: field.meta().map(str::to_string) };
    write_json(manifest_path, &man)
}

/// Header of a binary coefficient file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffHeader {
    pub d: usize,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    /// Binary body, relative to the header.
    pub data: String,
    pub source: CoeffSource,
}

/// CSV with columns `n1..nd, re, im`, one row per coefficient in box order.
pub fn write_coeffs_csv(coeffs: &CoeffArray, path: &Path) -> Result<()> {
    let d = coeffs.dim();
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    let mut header: Vec<String> = (1..=d).map(|j| format!("n{j}")).collect();
    header.extend(["re".into(), "im".into()]);
    w.write_record(&header).map_err(|e| format_err(path, e))?;
    for (n, v) in coeffs.iter() {
        let mut row: Vec<String> = n[..d].iter().map(|x| x.to_string()).collect();
        row.push(format!("{:.16e}", v.re));
        row.push(format!("{:.16e}", v.im));
        w.write_record(&row).map_err(|e| format_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_coeffs_csv(path: &Path) -> Result<CoeffArray> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| format_err(path, e))?;
    let cols = rdr.headers().map_err(|e| format_err(path, e))?.len();
    if !(3..=5).contains(&cols) {
        return Err(format_err(path, format!("expected n1..nd, re, im columns, got {cols}")));
    }
    let d = cols - 2;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        let bad = |e: &dyn std::fmt::Display| format_err(path, format!("row {}: {e}", i + 2));
        let mut n = [0i64; 3];
        for j in 0..d {
            n[j] = rec[j].parse().map_err(|e| bad(&e))?;
        }
        let re: f64 = rec[d].parse().map_err(|e| bad(&e))?;
        let im: f64 = rec[d + 1].parse().map_err(|e| bad(&e))?;
        rows.push((n, Complex64::new(re, im)));
    }
    let n_max = rows.iter().flat_map(|(n, _)| n[..d].iter().map(|v| v.unsigned_abs() as usize)).max().unwrap_or(0);
    let mut out = CoeffArray::zeros(d, n_max)?;
    let side = out.side();
    if rows.len() != side.pow(d as u32) {
        return Err(format_err(path, format!("expected {} rows for a full box of radius {n_max}, got {}", side.pow(d as u32), rows.len())));
    }
    for (n, v) in rows {
        let flat = out.flat_of(&n[..d]).expect("index inside box");
        out.values_mut()[flat] = v;
    }
    Ok(out.with_source(CoeffSource::Explicit))
}

/// Writes `<stem>.json` header and `<stem>.bin` body; `header_path` names the
/// header.
pub fn write_coeffs_bin(coeffs: &CoeffArray, header_path: &Path) -> Result<()> {
    let stem = header_path.file_stem().and_then(|s| s.to_str()).unwrap_or("coeffs");
    let data = format!("{stem}.bin");
    write_f64_pairs(&data_path(header_path, &data), coeffs.values())?;
    let header = CoeffHeader { d: coeffs.dim(), n_max: coeffs.n_max(), data, source: coeffs.source().clone() };
    write_json(header_path, &header)
}

pub fn read_coeffs_bin(header_path: &Path) -> Result<CoeffArray> {
    let text = read_text(header_path)?;
    let h: CoeffHeader = serde_json::from_str(&text).map_err(|e| format_err(header_path, e))?;
    let values = read_f64_pairs(&data_path(header_path, &h.data))?;
    CoeffArray::new(h.d, h.n_max, values, h.source)
}

/// Per-direction table `index, axis, angle_deg, order, verdict` for plotting;
/// `order` is `t` or `s*` depending on the scan mode.
pub fn write_direction_csv(report: &WavefrontReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    let d = report.x0.len();
    let mut header = vec!["index".to_string()];
    header.extend((1..=d).map(|j| format!("axis{j}")));
    header.extend(["angle_deg".into(), "order".into(), "cone_verdict".into(), "verdict".into()]);
    w.write_record(&header).map_err(|e| format_err(path, e))?;
    let verdict = |v| serde_json::to_value(v).ok().and_then(|x| x.as_str().map(str::to_string)).unwrap_or_default();
    for r in &report.directions {
        let mut row = vec![r.index.to_string()];
        row.extend(report.params.directions[r.index].iter().map(|v| format!("{v:.16e}")));
        row.push(r.angle_deg.map(|a| format!("{a:.16e}")).unwrap_or_default());
        let order = r.decay.as_ref().map(|e| e.order).or(r.sobolev.as_ref().map(|e| e.critical_order));
        row.push(order.map(|o| if o.is_finite() { format!("{o:.16e}") } else { "inf".into() }).unwrap_or_default());
        row.push(verdict(r.cone_verdict));
        row.push(verdict(r.verdict));
        w.write_record(&row).map_err(|e| format_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&serde_json::json!({"b": 0.1, "a": [1.0, f64::NAN]})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("null"));
        // keys are sorted and the output parses back
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn csv_field_with_header_and_one_column() {
        let dir = tempfile::tempdir().unwrap();
        let rows: String = (0..8).map(|i| format!("{}\n", i as f64 * 0.5)).collect();
        fs::write(dir.path().join("f.csv"), format!("value\n{rows}")).unwrap();
        fs::write(dir.path().join("f.json"), r#"{"d": 1, "M": 8, "data": "f.csv", "format": "csv"}"#).unwrap();
        let f = read_field(&dir.path().join("f.json")).unwrap();
        assert_eq!(f.values()[3], Complex64::new(1.5, 0.0));
    }

    #[test]
    fn short_binary_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("f.bin"), vec![0u8; 16 * 7]).unwrap();
        fs::write(dir.path().join("f.json"), r#"{"d": 1, "M": 8, "data": "f.bin"}"#).unwrap();
        let e = read_field(&dir.path().join("f.json")).unwrap_err();
        assert!(e.to_string().contains("expected M^d = 8"), "{e}");
    }
}
