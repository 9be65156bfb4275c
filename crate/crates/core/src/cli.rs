//! Command-line front end. Arguments are resolved into a [`RunConfig`] with
//! every default filled in; reports embed that config, and `replay` reruns a
//! report's config to reproduce it byte for byte.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::algebra::{local_product, young_bound_check, YoungNorms};
use crate::coeffs::{analytic_coeffs, fourier_coefficients, CoeffArray, Input, TestDistribution};
use crate::cones::{circle_directions, default_directions, default_half_angle_deg};
use crate::error::{Error, Result};
use crate::grid::{CutoffWindow, SampledField};
use crate::io;
use crate::spaces::{
    is_nu_moderate, membership_at, weighted_norm, Membership, MembershipReport, ModerateReport, Weight,
    MEMBERSHIP_LEVELS,
};
use crate::testcases::{generate, periodic_coeffs, Generated, OracleCase, Route, Target};
use crate::wavefront::{full_wf_map, PointScan, ScanMode, ScanParams, Verdict, DEFAULT_BAND, DEFAULT_THRESHOLD};

pub const THREADS_ENV: &str = "MICROLOCAL_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

/// Default `(eps_in, eps_out)` per dimension. Edges in 2-D and 3-D need the
/// narrower plateau to keep conormal verdicts sharp.
pub fn default_window(dim: usize) -> (f64, f64) {
    if dim == 1 {
        (0.05, 0.25)
    } else {
        (0.01, 0.25)
    }
}

/// Default radius for `product`; the Young check enumerates pairs of the
/// box, so it grows like the box size squared.
pub const DEFAULT_PRODUCT_N_MAX: usize = 64;

/// Default truncation radius per dimension.
pub fn default_n_max(dim: usize) -> usize {
    match dim {
        1 => 1024,
        2 => 512,
        _ => 64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(flatten)]
    pub command: Command,
    /// Recorded for reproducibility; the current subcommands draw no random
    /// numbers.
    pub seed: u64,
    /// Report destination; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Analyze(ScanConfig),
    Product(ProductConfig),
    Norm(NormConfig),
    ModerateCheck(ModerateConfig),
    Synth(SynthConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub input: String,
    pub x0: Vec<Vec<f64>>,
    pub window_in: f64,
    pub window_out: f64,
    pub params: ScanParams,
    pub mode: ScanMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungConfig {
    pub omega: Weight,
    pub nu: Weight,
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductConfig {
    pub a: String,
    pub b: String,
    pub x0: Vec<f64>,
    pub window_in: f64,
    pub window_out: f64,
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs_out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub young: Option<YoungConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    pub input: String,
    pub weight: Weight,
    pub q: f64,
    pub n_max: usize,
    /// Localize at this point first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub window_in: f64,
    pub window_out: f64,
    /// Radii for the convergence test; empty to skip it.
    pub membership_levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerateConfig {
    pub omega: Weight,
    pub nu: Weight,
    pub dim: usize,
    pub radius: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub oracle: TestDistribution,
    pub target: Target,
    /// Field manifest or coefficient file (`.csv`, else JSON header + `.bin`).
    pub path: String,
    #[serde(default)]
    pub csv_data: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub scans: Vec<PointScan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductResult {
    pub n_max: usize,
    pub reliable_radius: Option<usize>,
    pub flagged: usize,
    pub max_tail: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub young: Option<YoungNorms>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub n_max: usize,
    pub norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub membership: Option<MembershipReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthResult {
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RunResult {
    Scan(ScanResult),
    Product(ProductResult),
    Norm(NormResult),
    Moderate(ModerateReport),
    Synth(SynthResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub result: RunResult,
}

impl Report {
    /// 2 when any verdict is inconclusive or any point failed to decide,
    /// else 0.
    pub fn exit_code(&self) -> i32 {
        let undecided = match &self.result {
            RunResult::Scan(s) => s.scans.iter().any(|p| match &p.report {
                Some(r) => r.directions.iter().any(|d| d.verdict == Verdict::Inconclusive),
                None => false,
            }),
            RunResult::Norm(n) => n.membership.as_ref().is_some_and(|m| m.verdict == Membership::Inconclusive),
            _ => false,
        };
        if undecided {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        }
    }
}

/// `oracle:KIND[@x,y][;normal=a,b][;width=w][;wave=i,j][;mod=i,j]`.
pub fn parse_oracle(spec: &str) -> Result<TestDistribution> {
    let body = spec.strip_prefix("oracle:").unwrap_or(spec);
    let mut parts = body.split(';');
    let head = parts.next().unwrap_or_default();
    let (kind, at) = match head.split_once('@') {
        Some((k, a)) => (k, Some(parse_vec(a)?)),
        None => (head, None),
    };
    let mut o = OracleParts { kind: kind.trim().to_string(), at, ..Default::default() };
    for p in parts.filter(|p| !p.trim().is_empty()) {
        let (key, val) = p
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("oracle option `{p}` is not key=value")))?;
        match key.trim() {
            "normal" => o.normal = Some(parse_vec(val)?),
            "width" => o.width = Some(parse_f64(val)?),
            "wave" => o.wave = Some(parse_ints(val)?),
            "mod" => o.modulation = Some(parse_ints(val)?),
            k => return Err(Error::Parameter(format!("unknown oracle option `{k}`"))),
        }
    }
    o.build()
}

#[derive(Debug, Default)]
struct OracleParts {
    kind: String,
    at: Option<Vec<f64>>,
    normal: Option<Vec<f64>>,
    width: Option<f64>,
    wave: Option<Vec<i64>>,
    modulation: Option<Vec<i64>>,
}

impl OracleParts {
    fn build(self) -> Result<TestDistribution> {
        let dim = self
            .at
            .as_ref()
            .map(Vec::len)
            .or(self.normal.as_ref().map(Vec::len))
            .or(self.wave.as_ref().map(Vec::len))
            .or(self.modulation.as_ref().map(Vec::len));
        let at = |d: usize| self.at.clone().unwrap_or_else(|| vec![0.5; dim.unwrap_or(d)]);
        let two = |v: Vec<f64>| -> Result<[f64; 2]> {
            v.try_into().map_err(|v: Vec<f64>| Error::DimensionMismatch { expected: 2, got: v.len() })
        };
        let normal = || self.normal.clone().ok_or_else(|| Error::Parameter(format!("{} needs normal=a,b", self.kind)));
        let dist = match self.kind.as_str() {
            "delta" => TestDistribution::delta(&at(1)),
            "square_wave" | "square_wave_1d" => TestDistribution::square_wave(at(1)[0]),
            "kink" | "kink_1d" => TestDistribution::kink(at(1)[0]),
            "gaussian" | "gaussian_smooth" => TestDistribution::gaussian(&at(1), self.width.unwrap_or(0.01)),
            "halfplane_edge" | "halfplane_edge_2d" | "edge" => {
                TestDistribution::halfplane_edge(two(at(2))?, two(normal()?)?)?
            }
            "line_delta" | "line_delta_2d" => TestDistribution::line_delta(two(at(2))?, two(normal()?)?)?,
            "plane_wave" => TestDistribution::plane_wave(
                self.wave.as_deref().ok_or_else(|| Error::Parameter("plane_wave needs wave=i,j".into()))?,
            ),
            k => return Err(Error::Parameter(format!("unknown oracle kind `{k}`"))),
        };
        let dist = match &self.modulation {
            Some(m) => dist.modulated(m),
            None => dist,
        };
        dist.validate()?;
        Ok(dist)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse().map_err(|_| Error::Parameter(format!("`{t}` is not a number"))),
    }
}

/// Comma-separated floats.
pub fn parse_vec(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Parameter(format!("`{t}` is not an integer"))))
        .collect()
}

/// `poly:S`, `exp:RATE` or `one`.
pub fn parse_weight(s: &str) -> Result<Weight> {
    match s.split_once(':') {
        Some(("poly", v)) => Ok(Weight::polynomial(parse_f64(v)?)),
        Some(("exp", v)) => Ok(Weight::Exponential { rate: parse_f64(v)? }),
        None if s == "one" => Ok(Weight::one()),
        _ => Err(Error::Parameter(format!("weight `{s}` is not poly:S, exp:RATE or one"))),
    }
}

/// A field manifest, a coefficient file, or an oracle.
enum Source {
    Field(SampledField),
    Oracle(TestDistribution),
    Coeffs(CoeffArray),
}

fn load(spec: &str) -> Result<Source> {
    if spec.starts_with("oracle:") {
        return Ok(Source::Oracle(parse_oracle(spec)?));
    }
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "csv") {
        return Ok(Source::Coeffs(io::read_coeffs_csv(path)?));
    }
    let text = io::read_text(path)?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if v.get("N_max").is_some() {
        Ok(Source::Coeffs(io::read_coeffs_bin(path)?))
    } else if v.get("M").is_some() {
        Ok(Source::Field(io::read_field(path)?))
    } else {
        Err(Error::Format(format!("{}: neither a field manifest (M) nor a coefficient header (N_max)", path.display())))
    }
}

fn load_input(spec: &str) -> Result<Input> {
    match load(spec)? {
        Source::Field(f) => Ok(Input::Field(f)),
        Source::Oracle(d) => Ok(Input::Analytic(d)),
        Source::Coeffs(_) => Err(Error::Parameter(format!(
            "{spec}: coefficient files cannot be localized here; pass a field manifest or an oracle"
        ))),
    }
}

/// Dimension and, for fields, the largest admissible power-of-two radius.
fn probe(spec: &str) -> Result<(usize, Option<usize>)> {
    Ok(match load(spec)? {
        Source::Field(f) => {
            let i = Input::Field(f);
            (i.dim(), i.max_radius().map(pow2_at_most))
        }
        Source::Oracle(d) => (d.dim(), None),
        Source::Coeffs(c) => (c.dim(), Some(c.n_max())),
    })
}

fn pow2_at_most(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}

fn window(x0: &[f64], eps_in: f64, eps_out: f64) -> Result<CutoffWindow> {
    CutoffWindow::new(x0, eps_in, eps_out)
}

pub fn run(config: &RunConfig) -> Result<Report> {
    let result = match &config.command {
        Command::Analyze(c) => RunResult::Scan(run_scan(c)?),
        Command::Product(c) => RunResult::Product(run_product(c)?),
        Command::Norm(c) => RunResult::Norm(run_norm(c)?),
        Command::ModerateCheck(c) => {
            RunResult::Moderate(is_nu_moderate(&c.omega, &c.nu, c.dim, c.radius)?)
        }
        Command::Synth(c) => RunResult::Synth(run_synth(c)?),
    };
    Ok(Report { config: config.clone(), result })
}

fn run_scan(c: &ScanConfig) -> Result<ScanResult> {
    let input = load_input(&c.input)?;
    let first = c.x0.first().ok_or_else(|| Error::Parameter("at least one --x0 is required".into()))?;
    let w = window(first, c.window_in, c.window_out)?;
    let scans = full_wf_map(&input, &c.x0, &w, &c.params, &c.mode);
    if let Some(csv) = &c.csv {
        let csv = PathBuf::from(csv);
        for (i, p) in scans.iter().enumerate() {
            if let Some(r) = &p.report {
                let path = if scans.len() == 1 { csv.clone() } else { suffixed(&csv, i) };
                io::write_direction_csv(r, &path)?;
            }
        }
    }
    Ok(ScanResult { scans })
}

fn suffixed(path: &Path, i: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("directions");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{i}.{ext}"))
}

fn write_coeffs(coeffs: &CoeffArray, path: &str) -> Result<Vec<String>> {
    let p = Path::new(path);
    if p.extension().is_some_and(|e| e == "csv") {
        io::write_coeffs_csv(coeffs, p)?;
        Ok(vec![path.to_string()])
    } else {
        io::write_coeffs_bin(coeffs, p)?;
        Ok(vec![path.to_string(), p.with_extension("bin").display().to_string()])
    }
}

fn run_product(c: &ProductConfig) -> Result<ProductResult> {
    let a = load_input(&c.a)?;
    let b = load_input(&c.b)?;
    let w = window(&c.x0, c.window_in, c.window_out)?;
    let report = local_product(&a, &b, &c.x0, &w, c.n_max)?;
    if let Some(path) = &c.coeffs_out {
        write_coeffs(&report.coeffs, path)?;
    }
    let young = match &c.young {
        Some(y) => {
            let (fa, fb) = (a.localized(&w, c.n_max)?, b.localized(&w, c.n_max)?);
            young_bound_check(&fa, &fb, &y.omega, &y.nu, y.q1, y.q2)?.norms
        }
        None => None,
    };
    Ok(ProductResult {
        n_max: c.n_max,
        reliable_radius: report.reliable_radius,
        flagged: report.flagged,
        max_tail: report.max_tail,
        young,
    })
}

fn run_norm(c: &NormConfig) -> Result<NormResult> {
    let src = load(&c.input)?;
    let w = c.x0.as_ref().map(|x0| window(x0, c.window_in, c.window_out)).transpose()?;
    let coeffs_at = |n: usize| -> Result<CoeffArray> {
        match (&src, &w) {
            (Source::Coeffs(a), None) => a.truncate(n.min(a.n_max())),
            (Source::Coeffs(_), Some(_)) => {
                Err(Error::Parameter("coefficient files are normed as given; drop --x0".into()))
            }
            (Source::Field(f), Some(w)) => Input::Field(f.clone()).localized(w, n),
            (Source::Oracle(d), Some(w)) => analytic_coeffs(d, w, n),
            (Source::Field(f), None) => fourier_coefficients(f, n),
            (Source::Oracle(d), None) => periodic_coeffs(d, n),
        }
    };
    let coeffs = coeffs_at(c.n_max)?;
    let norm = weighted_norm(&coeffs, &c.weight, c.q)?;
    let membership = if c.membership_levels.is_empty() {
        None
    } else {
        Some(membership_at(coeffs_at, &c.weight, c.q, &c.membership_levels)?)
    };
    Ok(NormResult { n_max: c.n_max, norm, membership })
}

fn run_synth(c: &SynthConfig) -> Result<SynthResult> {
    let case = OracleCase {
        name: c.oracle.name().into(),
        dist: c.oracle.clone(),
        route: Route::Refined,
        justification: String::new(),
    };
    let files = match generate(&case, &c.target)? {
        Generated::Field(f) => {
            let p = Path::new(&c.path);
            let format = if c.csv_data { io::DataFormat::Csv } else { io::DataFormat::Binary };
            io::write_field(&f, p, format)?;
            let ext = if c.csv_data { "csv" } else { "bin" };
            vec![c.path.clone(), p.with_extension(ext).display().to_string()]
        }
        Generated::Coeffs(a) => write_coeffs(&a, &c.path)?,
    };
    Ok(SynthResult { files })
}

#[derive(Debug, Parser)]
#[command(name = "microlocal", version, about = "Wave front sets and Sobolev regularity from Fourier coefficients")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Wave front scans at one or more points.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Local product of two inputs, with an optional Young-bound check.
    Product(ProductArgs),
    /// Weighted l^q norm of Fourier coefficients, with a convergence test.
    Norm(NormArgs),
    /// Moderateness constant of a weight pair.
    ModerateCheck(ModerateArgs),
    /// Write an oracle distribution as a field or a coefficient file.
    Synth(SynthArgs),
    /// Rerun the configuration embedded in a report.
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCmd {
    /// Directions where the localized coefficients decay slower than --threshold.
    Wf(WfArgs),
    /// Directions in the Sobolev wave front set of order --order.
    Sobolev(SobolevArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Report path (stdout when absent).
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Plateau half-width (default 0.05 in 1-D, 0.01 otherwise).
    #[arg(long)]
    pub window_in: Option<f64>,
    /// Support half-width (default 0.25).
    #[arg(long)]
    pub window_out: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Field manifest, or `oracle:KIND[@x,..][;normal=..][;width=..][;wave=..][;mod=..]`.
    #[arg(long)]
    pub input: String,
    /// Scan point, comma separated; repeat for a batch.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub x0: Vec<String>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Coefficient box radius.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Dyadic shell range `k_min,k_max` (default: the top three that fit).
    #[arg(long)]
    pub shells: Option<String>,
    /// Cone half-angle in degrees.
    #[arg(long)]
    pub half_angle: Option<f64>,
    /// Number of equally spaced 2-D directions, or axes `a,b;c,d;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub directions: Option<String>,
    /// Per-direction CSV for plotting.
    #[arg(long)]
    pub csv: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct WfArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Decay orders below this are singular.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct SobolevArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Sobolev order s.
    #[arg(long, allow_hyphen_values = true)]
    pub order: f64,
    /// Half-width of the inconclusive band around s*.
    #[arg(long, default_value_t = DEFAULT_BAND)]
    pub band: f64,
}

#[derive(Debug, Args)]
pub struct ProductArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Product coefficients (`.csv`, else JSON header + `.bin`).
    #[arg(long)]
    pub coeffs_out: Option<String>,
    /// Weight on f1 and the product for the Young check (`poly:S`, `exp:R`, `one`).
    #[arg(long)]
    pub omega: Option<String>,
    /// Weight on f2.
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long, default_value = "1")]
    pub q1: String,
    #[arg(long, default_value = "1")]
    pub q2: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// Field manifest, coefficient file or oracle.
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value = "one", allow_hyphen_values = true)]
    pub weight: String,
    /// Exponent q >= 1, or `inf`.
    #[arg(long, default_value = "2")]
    pub q: String,
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Localize at this point before taking the norm.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Skip the convergence test over growing radii.
    #[arg(long)]
    pub no_membership: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ModerateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub omega: String,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: String,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 50)]
    pub radius: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// delta, square_wave, kink, gaussian, halfplane_edge, line_delta, plane_wave.
    pub kind: String,
    /// Location, comma separated (default: the cell centre).
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub normal: Option<String>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub wave: Option<String>,
    /// Modulation frequency m, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub modulate: Option<String>,
    /// Coefficient radius (exclusive with --grid).
    #[arg(long, conflicts_with = "grid")]
    pub nmax: Option<usize>,
    /// Samples per axis of a field.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Localize the coefficients with the window at --x0.
    #[arg(long)]
    pub localize: bool,
    /// Write 1-D field data as CSV.
    #[arg(long)]
    pub csv_data: bool,
    /// Output path: field manifest or coefficient file.
    #[arg(long, short = 'o')]
    pub path: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub report: PathBuf,
    #[arg(long)]
    pub out: Option<String>,
}

fn resolve_window(w: &WindowArgs, dim: usize) -> (f64, f64) {
    let (i, o) = default_window(dim);
    (w.window_in.unwrap_or(i), w.window_out.unwrap_or(o))
}

fn default_radius(dim: usize, limit: Option<usize>) -> usize {
    let n = default_n_max(dim);
    limit.map_or(n, |l| n.min(l))
}

fn resolve_scan(a: &ScanArgs, mode: ScanMode) -> Result<(ScanConfig, Common)> {
    let (dim, limit) = probe(&a.input)?;
    let x0 = a.x0.iter().map(|s| parse_vec(s)).collect::<Result<Vec<_>>>()?;
    // fields: keep the box well inside the DFT range
    let n_max = a.nmax.unwrap_or_else(|| default_radius(dim, limit.map(|l| l / 2)));
    let mut params = ScanParams::new(dim, n_max)?;
    if let Some(s) = &a.shells {
        let k = parse_ints(s)?;
        if k.len() != 2 || k.iter().any(|v| *v < 0) {
            return Err(Error::Parameter(format!("--shells `{s}` is not k_min,k_max")));
        }
        params = params.with_shells(k[0] as usize, k[1] as usize);
    }
    params = params.with_half_angle(a.half_angle.unwrap_or(default_half_angle_deg(dim)));
    if let Some(d) = &a.directions {
        params = params.with_directions(parse_directions(d, dim)?);
    } else {
        params = params.with_directions(default_directions(dim)?);
    }
    let (window_in, window_out) = resolve_window(&a.window, dim);
    Ok((
        ScanConfig { input: a.input.clone(), x0, window_in, window_out, params, mode, csv: a.csv.clone() },
        Common { out: a.common.out.clone(), seed: a.common.seed },
    ))
}

fn parse_directions(s: &str, dim: usize) -> Result<Vec<Vec<f64>>> {
    if let Ok(count) = s.trim().parse::<usize>() {
        if dim != 2 || count == 0 {
            return Err(Error::Parameter("a direction count is only meaningful in 2-D".into()));
        }
        return Ok(circle_directions(count));
    }
    s.split(';').map(parse_vec).collect()
}

/// Turns parsed arguments into a fully resolved configuration.
pub fn resolve(cmd: Cmd) -> Result<RunConfig> {
    let (command, common) = match cmd {
        Cmd::Analyze(AnalyzeCmd::Wf(a)) => {
            let (c, common) = resolve_scan(&a.scan, ScanMode::Decay { threshold: a.threshold })?;
            (Command::Analyze(c), common)
        }
        Cmd::Analyze(AnalyzeCmd::Sobolev(a)) => {
            let (c, common) = resolve_scan(&a.scan, ScanMode::Sobolev { order: a.order, band: a.band })?;
            (Command::Analyze(c), common)
        }
        Cmd::Product(a) => {
            let (dim, la) = probe(&a.a)?;
            let (_, lb) = probe(&a.b)?;
            let limit = la.into_iter().chain(lb).min();
            let x0 = parse_vec(&a.x0)?;
            let (window_in, window_out) = resolve_window(&a.window, dim);
            let young = match (&a.omega, &a.nu) {
                (Some(o), Some(n)) => Some(YoungConfig {
                    omega: parse_weight(o)?,
                    nu: parse_weight(n)?,
                    q1: parse_f64(&a.q1)?,
                    q2: parse_f64(&a.q2)?,
                }),
                (None, None) => None,
                _ => return Err(Error::Parameter("--omega and --nu go together".into())),
            };
            let c = ProductConfig {
                a: a.a,
                b: a.b,
                x0,
                window_in,
                window_out,
                n_max: a.nmax.unwrap_or_else(|| DEFAULT_PRODUCT_N_MAX.min(limit.map_or(usize::MAX, |l| l / 2))),
                coeffs_out: a.coeffs_out,
                young,
            };
            (Command::Product(c), a.common)
        }
        Cmd::Norm(a) => {
            let (dim, limit) = probe(&a.input)?;
            let n_max = a.nmax.unwrap_or_else(|| default_radius(dim, limit).min(MEMBERSHIP_LEVELS[3]));
            let levels = if a.no_membership {
                Vec::new()
            } else {
                // the last three powers of two up to n_max
                let top = pow2_at_most(n_max);
                [top / 4, top / 2, top].into_iter().filter(|l| *l > 0).collect()
            };
            let (window_in, window_out) = resolve_window(&a.window, dim);
            let c = NormConfig {
                input: a.input,
                weight: parse_weight(&a.weight)?,
                q: parse_f64(&a.q)?,
                n_max,
                x0: a.x0.as_deref().map(parse_vec).transpose()?,
                window_in,
                window_out,
                membership_levels: levels,
            };
            (Command::Norm(c), a.common)
        }
        Cmd::ModerateCheck(a) => {
            let c = ModerateConfig { omega: parse_weight(&a.omega)?, nu: parse_weight(&a.nu)?, dim: a.dim, radius: a.radius };
            (Command::ModerateCheck(c), a.common)
        }
        Cmd::Synth(a) => {
            let oracle = OracleParts {
                kind: a.kind.clone(),
                at: a.x0.as_deref().map(parse_vec).transpose()?,
                normal: a.normal.as_deref().map(parse_vec).transpose()?,
                width: a.width,
                wave: a.wave.as_deref().map(parse_ints).transpose()?,
                modulation: a.modulate.as_deref().map(parse_ints).transpose()?,
            }
            .build()?;
            let dim = oracle.dim();
            let target = match (a.nmax, a.grid) {
                (_, Some(m)) => Target::Grid { m },
                (Some(n_max), None) if a.localize => {
                    let (i, o) = resolve_window(&a.window, dim);
                    Target::Localized { n_max, window: window(&oracle.location, i, o)? }
                }
                (Some(n_max), None) => Target::Periodic { n_max },
                (None, None) => return Err(Error::Parameter("synth needs --nmax or --grid".into())),
            };
            let c = SynthConfig { oracle, target, path: a.path, csv_data: a.csv_data };
            (Command::Synth(c), a.common)
        }
        Cmd::Replay(_) => unreachable!("replay is handled before resolution"),
    };
    Ok(RunConfig { schema_version: crate::wavefront::SCHEMA_VERSION, command, seed: common.seed, out: common.out })
}

fn emit(report: &Report, out: Option<&str>) -> Result<()> {
    let json = io::to_json(report)?;
    match out {
        Some(p) => io::write_file(p, json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("{THREADS_ENV}={v} is not a thread count")))?;
        // a second call (tests running several commands) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32> {
    configure_threads()?;
    let (config, out) = match cli.cmd {
        Cmd::Replay(r) => {
            let text = io::read_text(&r.report)?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            let config: RunConfig = serde_json::from_value(
                v.get("config").cloned().ok_or_else(|| Error::Format("report has no config".into()))?,
            )?;
            let out = r.out.or(config.out.clone());
            (config, out)
        }
        cmd => {
            let config = resolve(cmd)?;
            let out = config.out.clone();
            (config, out)
        }
    };
    let report = run(&config)?;
    emit(&report, out.as_deref())?;
    Ok(report.exit_code())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
