//! Benchmark harness: approximation error, feature generation time and
//! optional downstream accuracy, per `(kernel, scheme, s, trial)` cell.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use signedrf_core::classifier::{train_with_cv, LinearModel};
use signedrf_core::data::{shuffled_indices, Dataset};
use signedrf_core::features::{build_feature_map, gram_from_features, map_points};
use signedrf_core::kernels::gram_matrix;
use signedrf_core::linalg::{relative_frobenius_error, Matrix};
use signedrf_core::radial::DecomposedMeasure;
use signedrf_core::sampling::{RngStream, SamplingScheme};
use signedrf_core::spectra::{decompose, SpectrumSpec};

use crate::config::{scheme_name, KernelParams, SCount};
use crate::{Error, Result};

pub const REPORT_HEADER: [&str; 8] = ["kernel", "scheme", "s", "trial", "rel_frob_err", "gen_time_s", "accuracy", "seed"];
pub const CURVE_HEADER: [&str; 4] = ["s", "median_err", "q25", "q75"];
pub const DEFAULT_SUBSAMPLE: usize = 300;
pub const DEFAULT_MAX_TRAIN: usize = 20_000;

#[derive(Debug, Clone, Serialize)]
pub struct BenchConfig {
    pub kernels: Vec<KernelParams>,
    #[serde(skip)]
    pub s_values: Vec<SCount>,
    /// `s_values` resolved against the data dimension; filled by [`benchmark_run`].
    pub s_resolved: Vec<usize>,
    #[serde(serialize_with = "ser_schemes")]
    pub schemes: Vec<SamplingScheme>,
    pub trials: usize,
    pub seed: u64,
    pub subsample: usize,
    pub classify: bool,
    pub train_fraction: f64,
    pub max_train: usize,
    pub epochs: usize,
    pub jobs: usize,
    pub rmax: Option<f64>,
}

fn ser_schemes<S: serde::Serializer>(v: &[SamplingScheme], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|&x| scheme_name(x)))
}

impl BenchConfig {
    pub fn new(kernels: Vec<KernelParams>, s_values: Vec<SCount>, schemes: Vec<SamplingScheme>, trials: usize, seed: u64) -> Self {
        Self {
            kernels,
            s_values,
            s_resolved: Vec::new(),
            schemes,
            trials,
            seed,
            subsample: DEFAULT_SUBSAMPLE,
            classify: false,
            train_fraction: 0.8,
            max_train: DEFAULT_MAX_TRAIN,
            epochs: 10,
            jobs: 1,
            rmax: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub kernel: String,
    pub scheme: &'static str,
    pub s: usize,
    pub trial: usize,
    pub rel_frob_err: f64,
    pub gen_time_s: f64,
    pub accuracy: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub kernel: String,
    pub scheme: &'static str,
    pub s: usize,
    pub trial: usize,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchOutcome {
    pub reports: Vec<BenchReport>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub s: usize,
    pub median_err: f64,
    pub q25: f64,
    pub q75: f64,
}

/// A binary model, or one model per class scored by largest decision value.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Binary { model: LinearModel, negative: i32, positive: i32 },
    OneVsRest(Vec<(i32, LinearModel)>),
}

impl Classifier {
    /// Labels `{-1, +1}` (or a subset) train directly; any other pair maps the
    /// smaller label to `-1`; three or more classes go one-vs-rest.
    pub fn fit(features: &Matrix, labels: &[i32], epochs: usize, rng: &RngStream) -> Result<Self> {
        let mut classes: Vec<i32> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.iter().all(|&y| y == 1 || y == -1) {
            let (model, _) = train_with_cv(features, labels, epochs, rng)?;
            return Ok(Classifier::Binary { model, negative: -1, positive: 1 });
        }
        if classes.len() <= 2 {
            let positive = *classes.last().unwrap();
            let negative = classes[0];
            let y: Vec<i32> = labels.iter().map(|&l| if l == positive { 1 } else { -1 }).collect();
            let (model, _) = train_with_cv(features, &y, epochs, rng)?;
            return Ok(Classifier::Binary { model, negative, positive });
        }
        let models = classes
            .iter()
            .map(|&c| {
                let y: Vec<i32> = labels.iter().map(|&l| if l == c { 1 } else { -1 }).collect();
                Ok((c, train_with_cv(features, &y, epochs, &rng.derive("ovr", c as u64))?.0))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Classifier::OneVsRest(models))
    }

    pub fn predict(&self, x: &[f64]) -> i32 {
        match self {
            Classifier::Binary { model, negative, positive } => {
                if model.predict(x) == 1 {
                    *positive
                } else {
                    *negative
                }
            }
            Classifier::OneVsRest(models) => {
                models.iter().map(|(c, m)| (m.decision(x), *c)).fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a }).1
            }
        }
    }

    pub fn accuracy(&self, features: &Matrix, labels: &[i32]) -> f64 {
        if labels.is_empty() {
            return 0.0;
        }
        features.row_iter().zip(labels).filter(|(x, &y)| self.predict(x) == y).count() as f64 / labels.len() as f64
    }
}

struct KernelSetup {
    params: KernelParams,
    split: DecomposedMeasure,
    exact: Matrix,
}

struct Cell {
    kernel: usize,
    scheme: SamplingScheme,
    s: usize,
    trial: usize,
}

/// Stream for one cell; independent of scheduling order.
pub fn cell_stream(seed: u64, kernel: &str, scheme: SamplingScheme, s: usize, trial: usize) -> RngStream {
    RngStream::new(seed, 0).derive(&format!("{kernel}/{}/{s}", scheme_name(scheme)), trial as u64)
}

/// Row order fixed by `seed`: the first `subsample` rows measure the error;
/// the classification split is taken from the same order.
fn layout(n: usize, cfg: &BenchConfig) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let order = shuffled_indices(n, &mut RngStream::new(cfg.seed, 0).derive("layout", 0).rng());
    let sub = order[..cfg.subsample.min(n)].to_vec();
    let n_train = ((n as f64 * cfg.train_fraction) as usize).min(n);
    let train = order[..n_train.min(cfg.max_train)].to_vec();
    let test = order[n_train..].to_vec();
    (sub, train, test)
}

/// Run every cell. Setup failures of a kernel are recorded against all of its
/// cells; the remaining kernels still run.
pub fn benchmark_run(cfg: &mut BenchConfig, data: &Dataset) -> Result<BenchOutcome> {
    if cfg.trials == 0 || cfg.s_values.is_empty() || cfg.schemes.is_empty() || cfg.kernels.is_empty() {
        return Err(Error::Config("need at least one kernel, s value, scheme and trial".into()));
    }
    let d = data.dim();
    cfg.s_resolved = cfg.s_values.iter().map(|s| s.resolve(d)).collect();
    let (sub, train, test) = layout(data.len(), cfg);
    let sub_rows = data.subset(&sub);
    let mut setups = Vec::new();
    let mut outcome = BenchOutcome::default();
    for &params in &cfg.kernels {
        let setup = (|| -> Result<KernelSetup> {
            let kernel = params.spec(d)?;
            let mut spec = SpectrumSpec::new(kernel);
            if let Some(r) = cfg.rmax {
                spec = spec.with_support_radius(r);
            }
            let split = decompose(&spec)?;
            let exact = gram_matrix(&kernel, sub_rows.rows())?;
            Ok(KernelSetup { params, split, exact })
        })();
        match setup {
            Ok(s) => setups.push(Some(s)),
            Err(e) => {
                for &scheme in &cfg.schemes {
                    for &s in &cfg.s_resolved {
                        for trial in 0..cfg.trials {
                            outcome.failures.push(CellFailure {
                                kernel: params.label(),
                                scheme: scheme_name(scheme),
                                s,
                                trial,
                                kind: e.kind(),
                                message: e.to_string(),
                            });
                        }
                    }
                }
                setups.push(None);
            }
        }
    }
    let mut cells = Vec::new();
    for (k, setup) in setups.iter().enumerate() {
        if setup.is_none() {
            continue;
        }
        for &scheme in &cfg.schemes {
            for &s in &cfg.s_resolved {
                for trial in 0..cfg.trials {
                    cells.push(Cell { kernel: k, scheme, s, trial });
                }
            }
        }
    }
    let (train_set, test_set) = (data.subset(&train), data.subset(&test));
    let run = |c: &Cell| -> std::result::Result<BenchReport, CellFailure> {
        let setup = setups[c.kernel].as_ref().unwrap();
        let label = setup.params.label();
        let fail = |e: Error| CellFailure {
            kernel: label.clone(),
            scheme: scheme_name(c.scheme),
            s: c.s,
            trial: c.trial,
            kind: e.kind(),
            message: e.to_string(),
        };
        let rng = cell_stream(cfg.seed, &label, c.scheme, c.s, c.trial);
        let start = Instant::now();
        let model = build_feature_map(&setup.split, c.s, c.scheme, &rng).map_err(|e| fail(e.into()))?;
        let mapped = map_points(&model, sub_rows.rows()).map_err(|e| fail(e.into()))?;
        let gen_time_s = start.elapsed().as_secs_f64();
        let err = relative_frobenius_error(&setup.exact, &gram_from_features(&mapped)).map_err(|e| fail(e.into()))?;
        let accuracy = if cfg.classify {
            let acc = (|| -> Result<f64> {
                let ft = map_points(&model, train_set.rows())?.concatenated();
                let fv = map_points(&model, test_set.rows())?.concatenated();
                let clf = Classifier::fit(&ft, train_set.labels(), cfg.epochs, &rng.derive("classifier", 0))?;
                Ok(clf.accuracy(&fv, test_set.labels()))
            })();
            Some(acc.map_err(fail)?)
        } else {
            None
        };
        Ok(BenchReport {
            kernel: label.clone(),
            scheme: scheme_name(c.scheme),
            s: c.s,
            trial: c.trial,
            rel_frob_err: err,
            gen_time_s,
            accuracy,
            seed: cfg.seed,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| cells.par_iter().map(run).collect());
    for r in results {
        match r {
            Ok(rep) => outcome.reports.push(rep),
            Err(f) => outcome.failures.push(f),
        }
    }
    Ok(outcome)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and quartiles of the error per `s`, for each `(kernel, scheme)`.
pub fn error_curves(reports: &[BenchReport]) -> BTreeMap<(String, &'static str), Vec<CurvePoint>> {
    let mut groups: BTreeMap<(String, &'static str), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.kernel.clone(), r.scheme)).or_default().entry(r.s).or_default().push(r.rel_frob_err);
    }
    groups
        .into_iter()
        .map(|(key, by_s)| {
            let pts = by_s
                .into_iter()
                .map(|(s, mut e)| {
                    e.sort_by(f64::total_cmp);
                    CurvePoint { s, median_err: quantile(&e, 0.5), q25: quantile(&e, 0.25), q75: quantile(&e, 0.75) }
                })
                .collect();
            (key, pts)
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_reports_csv(w: &mut dyn Write, reports: &[BenchReport], note: Option<&str>) -> Result<()> {
    if let Some(n) = note {
        writeln!(w, "# {n}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(REPORT_HEADER)?;
    for r in reports {
        csv.write_record([
            r.kernel.clone(),
            r.scheme.to_string(),
            r.s.to_string(),
            r.trial.to_string(),
            r.rel_frob_err.to_string(),
            r.gen_time_s.to_string(),
            opt(r.accuracy),
            r.seed.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// First line is `{"config": ...}`, then one object per report and one per
/// failure (`{"failure": ...}`).
pub fn write_reports_jsonl(w: &mut dyn Write, cfg: &serde_json::Value, outcome: &BenchOutcome) -> Result<()> {
    serde_json::to_writer(&mut *w, &serde_json::json!({ "config": cfg }))?;
    writeln!(w)?;
    for r in &outcome.reports {
        serde_json::to_writer(&mut *w, r)?;
        writeln!(w)?;
    }
    for f in &outcome.failures {
        serde_json::to_writer(&mut *w, &serde_json::json!({ "failure": f }))?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_curve_csv(w: &mut dyn Write, pts: &[CurvePoint], note: Option<&str>) -> Result<()> {
    if let Some(n) = note {
        writeln!(w, "# {n}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(CURVE_HEADER)?;
    for p in pts {
        csv.write_record([p.s.to_string(), p.median_err.to_string(), p.q25.to_string(), p.q75.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use signedrf_core::data::uniform_sphere;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn counts_cells_and_is_order_independent() {
        let data = uniform_sphere(60, 4, &RngStream::new(1, 0));
        let mk = |jobs| {
            let mut c = BenchConfig::new(
                vec![KernelParams::DeltaGaussian { tau1: 1.0, tau2: 10.0 }],
                crate::config::parse_s_list("2d,8d,32d").unwrap(),
                vec![SamplingScheme::Mc],
                3,
                5,
            );
            c.jobs = jobs;
            c
        };
        let a = benchmark_run(&mut mk(1), &data).unwrap();
        let b = benchmark_run(&mut mk(4), &data).unwrap();
        assert_eq!(a.reports.len(), 9);
        assert!(a.failures.is_empty());
        let strip = |o: &BenchOutcome| o.reports.iter().map(|r| (r.s, r.trial, r.rel_frob_err)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        let curves = error_curves(&a.reports);
        assert_eq!(curves.len(), 1);
        assert_eq!(curves.values().next().unwrap().iter().map(|p| p.s).collect::<Vec<_>>(), vec![8, 32, 128]);
    }

    #[test]
    fn failed_setup_is_recorded_per_cell() {
        // spherical kernels refuse data off the unit sphere
        let mut rows = uniform_sphere(20, 3, &RngStream::new(2, 0)).into_parts().0;
        rows.row_mut(0)[0] += 1.0;
        let data = Dataset::new(rows, vec![1; 20]).unwrap();
        let mut cfg = BenchConfig::new(
            vec![KernelParams::SphPoly { a: 2.0, p: 2 }, KernelParams::Gaussian { tau: 1.0 }],
            vec![SCount::Absolute(4)],
            vec![SamplingScheme::Mc, SamplingScheme::Omc],
            2,
            0,
        );
        let out = benchmark_run(&mut cfg, &data).unwrap();
        assert_eq!(out.failures.len(), 4);
        assert_eq!(out.failures[0].kind, "data_not_normalized");
        assert_eq!(out.reports.len(), 4);
    }

    #[test]
    fn multiclass_goes_one_vs_rest() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..90 {
            let c = i % 3;
            let t = (i / 3) as f64 / 30.0;
            let centre = [[4.0, 0.0], [-4.0, 0.0], [0.0, 4.0]][c as usize];
            rows.push(vec![centre[0] + t - 0.5, centre[1] + 0.5 - t]);
            labels.push(c + 7);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let clf = Classifier::fit(&x, &labels, 10, &RngStream::new(3, 0)).unwrap();
        assert!(matches!(clf, Classifier::OneVsRest(ref m) if m.len() == 3));
        assert!(clf.accuracy(&x, &labels) > 0.95);
        let two: Vec<i32> = labels.iter().map(|&l| if l == 7 { 0 } else { 5 }).collect();
        let clf = Classifier::fit(&x, &two, 10, &RngStream::new(3, 0)).unwrap();
        assert!(matches!(clf, Classifier::Binary { negative: 0, positive: 5, .. }));
        assert!(clf.accuracy(&x, &two) > 0.95);
    }
}
