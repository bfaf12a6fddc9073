//! Subcommands of the `signedrf` binary.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use signedrf_core::data::{gaussian_blobs, l2_normalize, min_max_scale, shuffled_indices, uniform_sphere, Dataset};
use signedrf_core::features::{build_feature_map, map_points};
use signedrf_core::linalg::Matrix;
use signedrf_core::radial::{compute_mass, jordan_split, DecomposedMeasure, RadialSignedMeasure, SpectrumSource};
use signedrf_core::sampling::{sample_measure, sample_radius_rejection, RngStream};
use signedrf_core::spectra::{decompose, numeric_spectrum, radial_grid, spectrum_of, SpectrumSpec, NUMERIC_TABLE_POINTS};

use crate::bench::{benchmark_run, error_curves, write_curve_csv, write_reports_csv, write_reports_jsonl, BenchConfig, Classifier};
use crate::config::{parse_scheme, parse_s_list, scheme_name, KernelParams, SCount};
use crate::diag::{summarize, RadialCdf};
use crate::formats::{write_atomic, write_features_binary, write_features_csv, write_sample_binary, write_sample_csv, write_spectrum_csv};
use crate::libsvm::parse_libsvm;
use crate::{Error, Result};

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "SIGNEDRF_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "signedrf", version, about = "Random features for stationary indefinite kernels")]
pub struct Cli {
    /// Master seed; every emitted file records it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a spectral density and report its masses.
    Spectrum(SpectrumArgs),
    /// Map a dataset through a sampled feature map.
    Features(FeaturesArgs),
    /// Approximation-error (and optional accuracy) benchmark.
    Bench(BenchArgs),
    /// Train and evaluate a linear classifier on random features.
    Classify(ClassifyArgs),
    /// Draw frequencies and check them against the target radial law.
    SampleDiag(SampleDiagArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelName {
    Gaussian,
    DeltaGaussian,
    SphPoly,
    Arccos0,
    Arccos1,
    Ntk,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value = "delta-gaussian")]
    pub kernel: KernelName,
    /// Gaussian bandwidth.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau1: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau2: f64,
    /// Spherical polynomial scale (a >= 2).
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// Spherical polynomial order; `bench` accepts a comma list (order sweep).
    #[arg(long, default_value = "2")]
    pub p: String,
    /// Truncation radius of the spectral support.
    #[arg(long)]
    pub rmax: Option<f64>,
}

impl KernelArgs {
    fn orders(&self) -> Result<Vec<u32>> {
        self.p
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("bad order {t:?}"))))
            .collect()
    }

    fn with_order(&self, p: u32) -> KernelParams {
        match self.kernel {
            KernelName::Gaussian => KernelParams::Gaussian { tau: self.tau },
            KernelName::DeltaGaussian => KernelParams::DeltaGaussian { tau1: self.tau1, tau2: self.tau2 },
            KernelName::SphPoly => KernelParams::SphPoly { a: self.a, p },
            KernelName::Arccos0 => KernelParams::Arccos0,
            KernelName::Arccos1 => KernelParams::Arccos1,
            KernelName::Ntk => KernelParams::Ntk,
        }
    }

    pub fn params(&self) -> Result<KernelParams> {
        match self.orders()?.as_slice() {
            [p] => Ok(self.with_order(*p)),
            _ => Err(Error::Config("--p takes a single order here".into())),
        }
    }

    /// One kernel per order for the spherical polynomial; the order list is
    /// ignored for other families.
    pub fn sweep(&self) -> Result<Vec<KernelParams>> {
        let orders = self.orders()?;
        Ok(if self.kernel == KernelName::SphPoly { orders.iter().map(|&p| self.with_order(p)).collect() } else { vec![self.with_order(orders[0])] })
    }

    fn spectrum_spec(&self, params: KernelParams, dim: usize) -> Result<SpectrumSpec> {
        let mut spec = SpectrumSpec::new(params.spec(dim)?);
        if let Some(r) = self.rmax {
            spec = spec.with_support_radius(r);
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Normalize {
    L2,
    Minmax,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SyntheticKind {
    /// Two unit-covariance Gaussian blobs, labels +1/-1.
    Blobs,
    /// Uniform on the unit sphere, all labels +1.
    Sphere,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// LIBSVM file.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Number of synthetic points instead of a file.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, value_enum, default_value = "blobs")]
    pub synthetic_kind: SyntheticKind,
    /// Distance between the blob centres.
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    /// Input dimension (synthetic data, or an empty file).
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, value_enum, default_value = "l2")]
    pub normalize: Normalize,
}

impl DataArgs {
    fn load(&self, seed: u64) -> Result<Dataset> {
        let raw = match (&self.data, self.synthetic) {
            (Some(path), _) => parse_libsvm(BufReader::new(fs::File::open(path)?))?,
            (None, Some(n)) => {
                let rng = RngStream::new(seed, 0).derive("synthetic", 0);
                match self.synthetic_kind {
                    SyntheticKind::Blobs => gaussian_blobs(n, self.dim, self.separation, &rng),
                    SyntheticKind::Sphere => uniform_sphere(n, self.dim, &rng),
                }
            }
            (None, None) => return Err(Error::Config("give --data FILE or --synthetic N".into())),
        };
        Ok(match self.normalize {
            Normalize::L2 => l2_normalize(&raw).0,
            Normalize::Minmax => min_max_scale(&raw),
            Normalize::None => raw,
        })
    }

    fn describe(&self) -> Value {
        json!({
            "data": self.data.as_ref().map(|p| p.display().to_string()),
            "synthetic": self.synthetic,
            "synthetic_kind": format!("{:?}", self.synthetic_kind).to_lowercase(),
            "separation": self.separation,
            "dim": self.dim,
            "normalize": format!("{:?}", self.normalize).to_lowercase(),
        })
    }
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Grid points on (0, R].
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Use the tabulated forward transform instead of a closed form.
    #[arg(long)]
    pub numeric: bool,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Frequencies per component: `N` or `Nd`.
    #[arg(long, default_value = "2d")]
    pub s: String,
    #[arg(long, default_value = "mc")]
    pub scheme: String,
    /// `.bin` selects the binary layout, anything else CSV. A `.json` sidecar is
    /// written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "2d,8d,32d")]
    pub s: String,
    /// Comma list of mc, omc, importance.
    #[arg(long, default_value = "mc")]
    pub scheme: String,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Rows used for the Gram-matrix error.
    #[arg(long, default_value_t = crate::bench::DEFAULT_SUBSAMPLE)]
    pub subsample: usize,
    /// Also train and score a classifier in every cell.
    #[arg(long)]
    pub classify: bool,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Held-out LIBSVM file; without it 20% of the rows are held out.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long, default_value = "128")]
    pub s: String,
    #[arg(long, default_value = "mc")]
    pub scheme: String,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Optional JSON result path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleDiagArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value = "1000")]
    pub s: String,
    #[arg(long, default_value = "mc")]
    pub scheme: String,
    /// Sample file (`.bin` or CSV) for the plus side; the minus side goes to
    /// `<stem>-minus.<ext>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a subcommand printed and whether it should exit nonzero.
#[derive(Debug)]
pub struct Outcome {
    pub summary: Value,
    pub failed: bool,
}

fn resolve_out(out: &Option<PathBuf>, default_name: &str) -> PathBuf {
    match out {
        Some(p) => p.clone(),
        None => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")).join(default_name),
    }
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, v)?;
        writeln!(w)?;
        Ok(())
    })
}


pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a, cli.seed),
        Command::Features(a) => cmd_features(a, cli.seed),
        Command::Bench(a) => cmd_bench(a, cli.seed),
        Command::Classify(a) => cmd_classify(a, cli.seed),
        Command::SampleDiag(a) => cmd_sample_diag(a, cli.seed),
    }
}

fn source_name(s: SpectrumSource) -> &'static str {
    match s {
        SpectrumSource::ClosedForm => "closed-form",
        SpectrumSource::Numeric => "numeric",
        SpectrumSource::Custom => "custom",
    }
}

/// Spectrum and split, using the tabulated transform when asked or when no
/// closed form exists.
fn spectrum_and_split(spec: &SpectrumSpec, numeric: bool) -> Result<(RadialSignedMeasure, DecomposedMeasure)> {
    let numeric = numeric || spec.kernel.family() == signedrf_core::kernels::KernelFamily::NtkTwoLayerRelu;
    if numeric {
        let mu = numeric_spectrum(spec, NUMERIC_TABLE_POINTS)?;
        let split = jordan_split(&mu)?;
        Ok((mu, split))
    } else {
        Ok((spectrum_of(spec)?, decompose(spec)?))
    }
}

fn f64_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!("inf")
    }
}

pub fn cmd_spectrum(a: &SpectrumArgs, seed: u64) -> Result<Outcome> {
    let params = a.kernel.params()?;
    let spec = a.kernel.spectrum_spec(params, a.dim)?;
    let (mu, split) = spectrum_and_split(&spec, a.numeric)?;
    let unsigned = compute_mass(&mu, false)?;
    let grid = radial_grid(mu.support_radius(), a.points);
    let out = resolve_out(&a.out, "spectrum.csv");
    let config = json!({
        "command": "spectrum",
        "kernel": params,
        "dim": a.dim,
        "rmax": mu.support_radius(),
        "points": a.points,
        "numeric": a.numeric,
        "seed": seed,
    });
    let prov = mu.provenance();
    let summary = json!({
        "config": config,
        "out": out.display().to_string(),
        "source": source_name(prov.source),
        "calibration": prov.calibration,
        "mass_plus": split.mass_plus,
        "mass_minus": split.mass_minus,
        "signed_mass": split.mass_plus - split.mass_minus,
        "tail_bound": unsigned.tail_bound.map(f64_or_null),
        "sign_changes": mu.sign_changes(),
        "negative_on_grid": grid.iter().any(|&r| mu.density(r) < 0.0),
    });
    write_atomic(&out, |w| write_spectrum_csv(w, &mu, &grid, Some(&config.to_string())))?;
    Ok(Outcome { summary, failed: false })
}

fn points_matrix(data: &Dataset, dim: usize) -> Matrix {
    if data.is_empty() {
        Matrix::zeros(0, dim)
    } else {
        data.rows().clone()
    }
}

pub fn cmd_features(a: &FeaturesArgs, seed: u64) -> Result<Outcome> {
    let params = a.kernel.params()?;
    let data = a.data.load(seed)?;
    let dim = if data.dim() > 0 { data.dim() } else { a.data.dim };
    let s = SCount::parse(&a.s)?.resolve(dim);
    let scheme = parse_scheme(&a.scheme)?;
    let spec = a.kernel.spectrum_spec(params, dim)?;
    let (_, split) = spectrum_and_split(&spec, false)?;
    let model = build_feature_map(&split, s, scheme, &RngStream::new(seed, 0))?;
    let mapped = map_points(&model, &points_matrix(&data, dim))?;
    let out = resolve_out(&a.out, "features.csv");
    let config = json!({
        "command": "features",
        "kernel": params,
        "input": a.data.describe(),
        "dim": dim,
        "s": s,
        "scheme": scheme_name(scheme),
        "rmax": spec.support_radius,
        "seed": seed,
    });
    let side = json!({
        "config": config,
        "n": mapped.rows(),
        "plus_cols": mapped.plus_block.cols(),
        "minus_cols": mapped.minus_block.cols(),
        "feature_dim": model.feature_dim(),
        "scale_plus": model.scale_plus,
        "scale_minus": model.scale_minus,
        "format": if is_binary(&out) { "binary" } else { "csv" },
    });
    if is_binary(&out) {
        write_atomic(&out, |w| write_features_binary(w, &mapped))?;
    } else {
        write_atomic(&out, |w| write_features_csv(w, &mapped, Some(&config.to_string())))?;
    }
    write_json(&sidecar(&out), &side)?;
    Ok(Outcome { summary: json!({ "out": out.display().to_string(), "sidecar": side }), failed: false })
}

pub fn cmd_bench(a: &BenchArgs, seed: u64) -> Result<Outcome> {
    let kernels = a.kernel.sweep()?;
    let data = a.data.load(seed)?;
    let schemes = a.scheme.split(',').map(parse_scheme).collect::<Result<Vec<_>>>()?;
    let mut cfg = BenchConfig::new(kernels, parse_s_list(&a.s)?, schemes, a.trials, seed);
    cfg.subsample = a.subsample;
    cfg.classify = a.classify;
    cfg.epochs = a.epochs;
    cfg.jobs = a.jobs;
    cfg.rmax = a.kernel.rmax;
    let outcome = benchmark_run(&mut cfg, &data)?;
    let dir = resolve_out(&a.out, "bench");
    let config = json!({ "command": "bench", "bench": cfg, "input": a.data.describe(), "seed": seed });
    let note = config.to_string();
    write_atomic(dir.join("reports.csv"), |w| write_reports_csv(w, &outcome.reports, Some(&note)))?;
    write_atomic(dir.join("reports.jsonl"), |w| write_reports_jsonl(w, &config, &outcome))?;
    let mut curves = Vec::new();
    for ((kernel, scheme), pts) in error_curves(&outcome.reports) {
        let path = dir.join(format!("curve-{kernel}-{scheme}.csv"));
        let cnote = json!({ "kernel": kernel, "scheme": scheme, "config": config }).to_string();
        write_atomic(&path, |w| write_curve_csv(w, &pts, Some(&cnote)))?;
        curves.push(json!({ "kernel": kernel, "scheme": scheme, "file": path.display().to_string(), "points": pts }));
    }
    for f in &outcome.failures {
        log::error!("cell {}/{}/s={}/trial={} failed: {}", f.kernel, f.scheme, f.s, f.trial, f.message);
    }
    let bad_values = outcome.reports.iter().any(|r| !(r.rel_frob_err.is_finite() && r.rel_frob_err >= 0.0));
    let summary = json!({
        "out": dir.display().to_string(),
        "reports": outcome.reports.len(),
        "failures": outcome.failures.len(),
        "curves": curves,
        "seed": seed,
    });
    Ok(Outcome { summary, failed: !outcome.failures.is_empty() || bad_values })
}

pub fn cmd_classify(a: &ClassifyArgs, seed: u64) -> Result<Outcome> {
    let params = a.kernel.params()?;
    let data = a.data.load(seed)?;
    let (train, test) = match &a.test_data {
        Some(path) => {
            let t = parse_libsvm(BufReader::new(fs::File::open(path)?))?;
            let t = match a.data.normalize {
                Normalize::L2 => l2_normalize(&t).0,
                Normalize::Minmax => min_max_scale(&t),
                Normalize::None => t,
            };
            (data, t)
        }
        None => {
            let order = shuffled_indices(data.len(), &mut RngStream::new(seed, 0).derive("split", 0).rng());
            let cut = data.len() * 4 / 5;
            (data.subset(&order[..cut]), data.subset(&order[cut..]))
        }
    };
    if test.dim() != train.dim() && !test.is_empty() {
        return Err(signedrf_core::Error::DimensionMismatch { expected: train.dim(), got: test.dim() }.into());
    }
    let dim = train.dim().max(1);
    let s = SCount::parse(&a.s)?.resolve(dim);
    let scheme = parse_scheme(&a.scheme)?;
    let spec = a.kernel.spectrum_spec(params, dim)?;
    let (_, split) = spectrum_and_split(&spec, false)?;
    let rng = RngStream::new(seed, 0);
    let model = build_feature_map(&split, s, scheme, &rng)?;
    let ft = map_points(&model, &points_matrix(&train, dim))?.concatenated();
    let fv = map_points(&model, &points_matrix(&test, dim))?.concatenated();
    let clf = Classifier::fit(&ft, train.labels(), a.epochs, &rng.derive("classifier", 0))?;
    let mut counts = std::collections::BTreeMap::new();
    for &y in test.labels() {
        *counts.entry(y).or_insert(0usize) += 1;
    }
    let majority = counts.values().max().map_or(0.0, |&c| c as f64 / test.len() as f64);
    let config = json!({
        "command": "classify",
        "kernel": params,
        "input": a.data.describe(),
        "test_data": a.test_data.as_ref().map(|p| p.display().to_string()),
        "s": s,
        "scheme": scheme_name(scheme),
        "epochs": a.epochs,
        "seed": seed,
    });
    let summary = json!({
        "config": config,
        "train_n": train.len(),
        "test_n": test.len(),
        "classes": counts.len(),
        "one_vs_rest": matches!(clf, Classifier::OneVsRest(_)),
        "train_accuracy": clf.accuracy(&ft, train.labels()),
        "test_accuracy": clf.accuracy(&fv, test.labels()),
        "majority_baseline": majority,
    });
    if a.out.is_some() {
        write_json(&resolve_out(&a.out, "classify.json"), &summary)?;
    }
    Ok(Outcome { summary, failed: false })
}

pub fn cmd_sample_diag(a: &SampleDiagArgs, seed: u64) -> Result<Outcome> {
    let params = a.kernel.params()?;
    let s = SCount::parse(&a.s)?.resolve(a.dim);
    let scheme = parse_scheme(&a.scheme)?;
    let spec = a.kernel.spectrum_spec(params, a.dim)?;
    let (_, split) = spectrum_and_split(&spec, false)?;
    let out = resolve_out(&a.out, "frequencies.csv");
    let config = json!({
        "command": "sample-diag",
        "kernel": params,
        "dim": a.dim,
        "s": s,
        "scheme": scheme_name(scheme),
        "rmax": spec.support_radius,
        "seed": seed,
    });
    let rng = RngStream::new(seed, 0);
    let mut sides = Vec::new();
    for (name, mu, mass) in [("plus", &split.mu_plus, split.mass_plus), ("minus", &split.mu_minus, split.mass_minus)] {
        if mass == 0.0 {
            continue;
        }
        let sample = sample_measure(mu, s, scheme, &mut rng.derive(if name == "plus" { "omega" } else { "nu" }, 0).rng())?;
        let cdf = RadialCdf::new(mu, 2000)?;
        let summary = summarize(&sample, &cdf);
        let rejection = match mu.density_fn() {
            signedrf_core::radial::RadialDensity::Gaussian { .. } => None,
            _ => {
                let d = sample_radius_rejection(mu, s, &mut rng.derive("diag", 0).rng())?;
                Some(json!({ "acceptance_rate": d.acceptance_rate(), "envelope": d.envelope, "breaches": d.breaches }))
            }
        };
        let path = if name == "plus" {
            out.clone()
        } else {
            let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let ext = out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
            out.with_file_name(format!("{stem}-minus{ext}"))
        };
        let note = json!({ "side": name, "config": config }).to_string();
        if is_binary(&path) {
            write_atomic(&path, |w| write_sample_binary(w, &sample))?;
            write_json(&sidecar(&path), &json!({ "side": name, "config": config }))?;
        } else {
            write_atomic(&path, |w| write_sample_csv(w, &sample, Some(&note)))?;
        }
        sides.push(json!({ "side": name, "mass": mass, "file": path.display().to_string(), "sample": summary, "rejection": rejection }));
    }
    Ok(Outcome { summary: json!({ "config": config, "sides": sides }), failed: false })
}
