//! Acceptance checks. One line per criterion; the process exits nonzero if any
//! criterion fails. Runtime limits are part of each pass condition.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use clap::Parser;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand_distr::{Distribution, StandardNormal};
use signedrf::bench::{benchmark_run, cell_stream, BenchConfig};
use signedrf::cli::{run, Cli};
use signedrf::config::{KernelParams, SCount};
use signedrf::libsvm::{parse_libsvm_bytes, parse_libsvm_str, to_libsvm_string};
use signedrf_core::data::{uniform_sphere, Dataset};
use signedrf_core::features::{approx_gram, build_feature_map, estimator_mse, map_points};
use signedrf_core::kernels::{gram_matrix, ntk_monte_carlo_oracle, KernelFamily, KernelSpec};
use signedrf_core::linalg::{dot, min_eigenvalue, relative_frobenius_error, Matrix};
use signedrf_core::quadrature::{integrate, QuadratureConfig};
use signedrf_core::radial::{jordan_split, radial_inverse_transform};
use signedrf_core::sampling::{sample_radius_rejection, RngStream, SamplingScheme};
use signedrf_core::specfun::{bessel_j, BesselOrder};
use signedrf_core::spectra::{decompose, radial_grid, spectrum_of, SpectrumSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Check = Result<(bool, String), String>;

fn unit_pairs(n: usize, d: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let pts = uniform_sphere(2 * n, d, &RngStream::new(seed, 0));
    (0..n).map(|i| (pts.rows().row(2 * i).to_vec(), pts.rows().row(2 * i + 1).to_vec())).collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn c1_unbiasedness() -> Check {
    let d = 16;
    let kernel = KernelSpec::delta_gaussian(1.0, 10.0, d).map_err(e)?;
    let split = decompose(&SpectrumSpec::new(kernel)).map_err(e)?;
    let pairs = unit_pairs(20, d, 101);
    let stats = estimator_mse(
        &kernel,
        |r| build_feature_map(&split, 64, SamplingScheme::Mc, r),
        &pairs,
        200,
        &RngStream::new(102, 0),
    )
    .map_err(e)?;
    let inside = stats.per_pair.iter().filter(|p| p.within(3.0)).count();
    Ok((inside >= 19, format!("{inside}/20 pairs within 3 SE of the exact kernel (need >= 19)")))
}

fn c2_calibration() -> Check {
    let target = (1.0f64 - 0.25).powi(2);
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [4, 16] {
        let spec = SpectrumSpec::new(KernelSpec::spherical_polynomial(2.0, 2, d).map_err(e)?);
        let mu = spectrum_of(&spec).map_err(e)?;
        let split = jordan_split(&mu).map_err(e)?;
        let signed = split.mass_plus - split.mass_minus;
        let k1 = radial_inverse_transform(&mu, 1.0).map_err(e)?;
        let pass = (signed - 1.0).abs() <= 1e-3 && (k1 - target).abs() <= 2e-2;
        ok &= pass;
        detail.push(format!(
            "d={d}: signed mass {signed:.6} (|err| {:.1e} <= 1e-3), k(1) {k1:.5} (|err| {:.1e} <= 2e-2) {}",
            (signed - 1.0).abs(),
            (k1 - target).abs(),
            if pass { "ok" } else { "MISS" }
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn c3_ntk() -> Check {
    let d = 8;
    let kernel = KernelSpec::new(KernelFamily::NtkTwoLayerRelu, d).map_err(e)?;
    let mut worst = 0.0f64;
    for (i, (x, y)) in unit_pairs(10, d, 103).iter().enumerate() {
        let z = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let mc = ntk_monte_carlo_oracle(x, y, 1_000_000, 104 + i as u64).map_err(e)?;
        worst = worst.max((mc.mean - kernel.eval(z)).abs());
    }
    Ok((worst <= 5e-3, format!("max |MC - closed form| = {worst:.2e} over 10 pairs (<= 5e-3)")))
}

fn c4_indefiniteness() -> Check {
    let mu = spectrum_of(&SpectrumSpec::new(KernelSpec::spherical_polynomial(2.0, 2, 16).map_err(e)?)).map_err(e)?;
    let min_density = radial_grid(10.0, 2000).iter().map(|&r| mu.density(r)).fold(f64::INFINITY, f64::min);
    let kernel = KernelSpec::delta_gaussian(1.0, 10.0, 16).map_err(e)?;
    let pts = uniform_sphere(100, 16, &RngStream::new(105, 0));
    let lam = min_eigenvalue(&gram_matrix(&kernel, pts.rows()).map_err(e)?).map_err(e)?;
    Ok((
        min_density < 0.0 && lam < -1e-8,
        format!("(a) min density on (0,10] = {min_density:.3e} (< 0); (b) min eigenvalue = {lam:.4e} (< -1e-8)"),
    ))
}

fn c5_error_decay() -> Check {
    let d = 16;
    let pts = uniform_sphere(300, d, &RngStream::new(106, 0));
    let mut ok = true;
    let mut detail = Vec::new();
    for kernel in [KernelSpec::delta_gaussian(1.0, 10.0, d).map_err(e)?, KernelSpec::spherical_polynomial(2.0, 2, d).map_err(e)?] {
        let split = decompose(&SpectrumSpec::new(kernel)).map_err(e)?;
        let exact = gram_matrix(&kernel, pts.rows()).map_err(e)?;
        let mut medians = Vec::new();
        for s in [2 * d, 8 * d, 32 * d] {
            let mut errs = Vec::new();
            for seed in 0..10u64 {
                let m = build_feature_map(&split, s, SamplingScheme::Mc, &RngStream::new(seed, s as u64)).map_err(e)?;
                errs.push(relative_frobenius_error(&exact, &approx_gram(&m, pts.rows()).map_err(e)?).map_err(e)?);
            }
            medians.push(median(&mut errs));
        }
        let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
        let small = kernel.name() != "delta-gaussian" || medians[2] < 0.1;
        ok &= monotone && small;
        detail.push(format!("{} medians {:.4}/{:.4}/{:.4}", kernel.name(), medians[0], medians[1], medians[2]));
    }
    Ok((ok, format!("{} (non-increasing; delta-gaussian at 32d < 0.1)", detail.join(", "))))
}

fn c6_variance_reduction() -> Check {
    let d = 32;
    let kernel = KernelSpec::gaussian(1.0, d).map_err(e)?;
    let split = decompose(&SpectrumSpec::new(kernel)).map_err(e)?;
    let pairs = unit_pairs(500, d, 107);
    let mse = |scheme, seed| {
        estimator_mse(&kernel, |r| build_feature_map(&split, d, scheme, r), &pairs, 100, &RngStream::new(seed, 0)).map(|s| s.mse)
    };
    let mc = mse(SamplingScheme::Mc, 108).map_err(e)?;
    let omc = mse(SamplingScheme::Omc, 109).map_err(e)?;
    Ok((omc <= 1.05 * mc, format!("MSE(OMC) = {omc:.4e}, MSE(MC) = {mc:.4e}, ratio {:.3} (<= 1.05)", omc / mc)))
}

const PREC: u64 = 640;

fn fixed_one() -> BigInt {
    BigInt::one() << PREC
}

/// `atan(1/n)` scaled by `2^PREC`.
fn atan_inv(n: u64) -> BigInt {
    let n2 = BigInt::from(n * n);
    let mut power = fixed_one() / BigInt::from(n);
    let mut sum = BigInt::zero();
    let mut k = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &n2;
        k += 1;
    }
    sum
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// `J_{m/2}(k/4)` from the power series in fixed point with `PREC` bits.
fn bessel_oracle(twice_nu: u64, k: u64) -> f64 {
    let pi: BigInt = (atan_inv(5) << 4u32) - (atan_inv(239) << 2u32);
    let sqrt_pi = (pi << PREC).sqrt();
    // S = sum_j (-k^2/64)^j / (j! (nu+1)_j), with (nu+1)_j built from 2(j+nu) = 2j + twice_nu
    let mut term = fixed_one();
    let mut sum = fixed_one();
    let mut j = 0u64;
    loop {
        j += 1;
        term = -(term * BigInt::from(2 * k * k)) / BigInt::from(64 * j * (2 * j + twice_nu));
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    // (x/2)^nu / Gamma(nu + 1), x/2 = k/8
    let m = twice_nu / 2;
    let mut scale = (BigInt::from(k).pow(m as u32) << PREC) / BigInt::from(8u64).pow(m as u32);
    if twice_nu % 2 == 0 {
        scale /= factorial(m);
    } else {
        let sqrt_half_x = (BigInt::from(k) << (2 * PREC - 3)).sqrt();
        scale = (scale * sqrt_half_x) >> PREC;
        // Gamma(m + 3/2) = (2m+2)! sqrt(pi) / (4^{m+1} (m+1)!)
        scale = (scale * (BigInt::from(4u64).pow(m as u32 + 1) * factorial(m + 1))) / factorial(2 * m + 2);
        scale = (scale << PREC) / &sqrt_pi;
    }
    let value = (scale * sum) >> PREC;
    let sign = if value.is_negative() { -1.0 } else { 1.0 };
    sign * value.abs().to_f64().unwrap() * 2f64.powi(-(PREC as i32))
}

fn c7_special_functions() -> Check {
    let mut worst_rel = 0.0f64;
    let mut worst_rec = 0.0f64;
    for twice_nu in 0..=24u64 {
        let nu = twice_nu as f64 / 2.0;
        for k in 1..=120u64 {
            let x = k as f64 / 4.0;
            let ours = bessel_j(BesselOrder::new(nu).map_err(e)?, x).map_err(e)?;
            let oracle = bessel_oracle(twice_nu, k);
            worst_rel = worst_rel.max((ours - oracle).abs() / oracle.abs());
            if (2..=22).contains(&twice_nu) {
                let j = |n: f64| bessel_j(BesselOrder::new(n).unwrap(), x).unwrap();
                worst_rec = worst_rec.max((j(nu - 1.0) + j(nu + 1.0) - 2.0 * nu / x * ours).abs());
            }
        }
    }
    Ok((
        worst_rel <= 1e-8 && worst_rec <= 1e-7,
        format!("max relative error vs series oracle {worst_rel:.2e} (<= 1e-8), max recurrence residual {worst_rec:.2e} (<= 1e-7)"),
    ))
}

fn c8_sampler() -> Check {
    let d = 16;
    let mu = spectrum_of(&SpectrumSpec::new(KernelSpec::spherical_polynomial(2.0, 2, d).map_err(e)?)).map_err(e)?;
    let plus = jordan_split(&mu).map_err(e)?.mu_plus;
    let q = |r: f64| plus.density(r) * r.powi(d as i32 - 1);
    // cumulative law on a fine grid, inverted for 50 equiprobable bins
    let panels = 4000;
    let h = 10.0 / panels as f64;
    let mut cum = vec![0.0];
    for i in 0..panels {
        let piece = integrate(q, h * i as f64, h * (i + 1) as f64, QuadratureConfig::MASS).map_err(e)?.value;
        cum.push(cum[i] + piece);
    }
    let total = cum[panels];
    let bins = 50;
    let edges: Vec<f64> = (1..bins)
        .map(|b| {
            let t = total * b as f64 / bins as f64;
            let i = cum.partition_point(|&c| c < t).clamp(1, panels);
            let f = (t - cum[i - 1]) / (cum[i] - cum[i - 1]);
            h * ((i - 1) as f64 + f)
        })
        .collect();
    let s = 100_000;
    let draws = sample_radius_rejection(&plus, s, &mut RngStream::new(110, 0).rng()).map_err(e)?;
    let mut counts = vec![0usize; bins];
    for r in &draws.radii {
        counts[edges.partition_point(|&x| x < *r)] += 1;
    }
    let expected = s as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let crit = ChiSquared::new((bins - 1) as f64).map_err(e)?.inverse_cdf(0.99);
    Ok((stat < crit, format!("chi2 = {stat:.2} on {} df, 1% critical value {crit:.2}", bins - 1)))
}

fn c9_pd_degeneration() -> Check {
    let (d, s, seed) = (8, 16, 111);
    let kernel = KernelSpec::gaussian(1.0, d).map_err(e)?;
    let split = decompose(&SpectrumSpec::new(kernel)).map_err(e)?;
    let pts = uniform_sphere(200, d, &RngStream::new(112, 0));
    let reference = |omega_rng: &RngStream, x: &Matrix| -> Matrix {
        let mut r = omega_rng.rng();
        let mut w = Matrix::zeros(s, d);
        for i in 0..s {
            for v in w.row_mut(i) {
                *v = StandardNormal.sample(&mut r);
            }
        }
        let amp = (1.0 / s as f64).sqrt();
        let mut f = Matrix::zeros(x.rows(), 2 * s);
        for i in 0..x.rows() {
            for k in 0..s {
                let t = dot(w.row(k), x.row(i));
                f.row_mut(i)[2 * k] = amp * t.cos();
                f.row_mut(i)[2 * k + 1] = amp * t.sin();
            }
        }
        f
    };
    let rng = RngStream::new(seed, 0);
    let model = build_feature_map(&split, s, SamplingScheme::Mc, &rng).map_err(e)?;
    let ours = map_points(&model, pts.rows()).map_err(e)?;
    let refs = reference(&rng.derive("omega", 0), pts.rows());
    let feat_diff = ours.plus_block.sub(&refs).map_err(e)?.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let exact = gram_matrix(&kernel, pts.rows()).map_err(e)?;
    let err_ref = relative_frobenius_error(&exact, &refs.gram()).map_err(e)?;
    let err_ours = relative_frobenius_error(&exact, &approx_gram(&model, pts.rows()).map_err(e)?).map_err(e)?;
    // the same comparison through the benchmark harness (one cell, s = 2d)
    let data = Dataset::new(pts.rows().clone(), vec![1; 200]).map_err(e)?;
    let params = KernelParams::Gaussian { tau: 1.0 };
    let mut cfg = BenchConfig::new(vec![params], vec![SCount::TimesDim(2)], vec![SamplingScheme::Mc], 1, seed);
    let bench = benchmark_run(&mut cfg, &data).map_err(e)?;
    let cell = cell_stream(seed, &params.label(), SamplingScheme::Mc, s, 0);
    let bench_ref = relative_frobenius_error(&exact, &reference(&cell.derive("omega", 0), pts.rows()).gram()).map_err(e)?;
    let bench_err = bench.reports.first().map(|r| r.rel_frob_err).ok_or("bench produced no report")?;
    let pass = ours.minus_block.cols() == 0
        && feat_diff <= 1e-12
        && (err_ours - err_ref).abs() <= 1e-12
        && (bench_err - bench_ref).abs() <= 1e-12;
    Ok((
        pass,
        format!(
            "minus block {}x{}, max feature diff {feat_diff:.1e}, |err - err_ref| = {:.1e} (pipeline), {:.1e} (bench cell)",
            ours.minus_block.rows(),
            ours.minus_block.cols(),
            (err_ours - err_ref).abs(),
            (bench_err - bench_ref).abs()
        ),
    ))
}

/// A LIBSVM file with irregular spacing, comments, blank lines and signed
/// labels; returns the text and the dataset it encodes.
fn libsvm_file() -> impl Strategy<Value = String> {
    let value = prop_oneof![
        (-1000i32..1000).prop_map(|v| v.to_string()),
        (-1e3f64..1e3).prop_map(|v| format!("{v}")),
        (-1e3f64..1e3).prop_map(|v| format!("{v:e}")),
        Just("0".to_string()),
    ];
    let entry = (1usize..4, value);
    let line = (
        prop_oneof![Just("+1"), Just("-1"), Just("1"), Just("3"), Just("2.0")],
        prop::collection::vec(entry, 0..12),
        prop_oneof![Just(" "), Just("\t"), Just("  ")],
        prop::option::of("[ a-z0-9:#]{0,12}"),
        any::<bool>(),
    )
        .prop_map(|(label, entries, sep, comment, blank)| {
            let mut idx = 0;
            let mut s = label.to_string();
            for (gap, v) in entries {
                idx += gap;
                s.push_str(sep);
                s.push_str(&format!("{idx}:{v}"));
            }
            if let Some(c) = comment {
                s.push_str(" #");
                s.push_str(&c);
            }
            if blank {
                s.push('\n');
            }
            s
        });
    prop::collection::vec(line, 0..100).prop_map(|lines| lines.join("\n"))
}

fn c10_parser() -> Check {
    let mut runner = TestRunner::new(Config { cases: 100, failure_persistence: None, ..Config::default() });
    let round_trip = runner.run(&libsvm_file(), |text| {
        let a = parse_libsvm_str(&text).map_err(|e| TestCaseError::fail(format!("generated file rejected: {e}")))?;
        let b = parse_libsvm_str(&to_libsvm_string(&a)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(to_libsvm_string(&a), to_libsvm_string(&b));
        Ok(())
    });
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    let bytes = prop_oneof![
        prop::collection::vec(any::<u8>(), 0..400),
        prop::collection::vec(prop::sample::select(b"0123456789+-.:eE# \t\n\r\xffabnif".to_vec()), 0..400),
    ];
    let totality = runner.run(&bytes, |b| {
        let ok = catch_unwind(AssertUnwindSafe(|| {
            let _ = parse_libsvm_bytes(&b);
        }));
        prop_assert!(ok.is_ok(), "parser panicked");
        Ok(())
    });
    Ok((
        round_trip.is_ok() && totality.is_ok(),
        format!(
            "round trip on 100 generated files: {}; 1000 arbitrary byte streams without panic: {}",
            round_trip.as_ref().map(|_| "ok".to_string()).unwrap_or_else(|e| e.to_string()),
            totality.as_ref().map(|_| "ok".to_string()).unwrap_or_else(|e| e.to_string())
        ),
    ))
}

fn c11_classification() -> Check {
    let out = std::env::temp_dir().join(format!("signedrf-acceptance-{}.json", std::process::id()));
    let cli = Cli::try_parse_from([
        "signedrf",
        "--seed",
        "113",
        "classify",
        "--kernel",
        "delta-gaussian",
        "--synthetic",
        "2000",
        "--dim",
        "16",
        "--s",
        "128",
        "--out",
        out.to_str().unwrap(),
    ])
    .map_err(e)?;
    let summary = run(&cli).map_err(e)?.summary;
    let _ = std::fs::remove_file(&out);
    let acc = summary["test_accuracy"].as_f64().ok_or("no accuracy in summary")?;
    Ok((acc > 0.9, format!("test accuracy {acc:.4} on {} held-out points (> 0.9)", summary["test_n"])))
}

type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "unbiasedness", Duration::from_secs(60), c1_unbiasedness),
        (2, "calibration identity", Duration::from_secs(30), c2_calibration),
        (3, "NTK closed form", Duration::from_secs(60), c3_ntk),
        (4, "indefiniteness witnesses", Duration::from_secs(30), c4_indefiniteness),
        (5, "error decay", Duration::from_secs(120), c5_error_decay),
        (6, "variance reduction", Duration::from_secs(120), c6_variance_reduction),
        (7, "special functions", Duration::from_secs(30), c7_special_functions),
        (8, "sampler correctness", Duration::from_secs(60), c8_sampler),
        (9, "PD degeneration", Duration::from_secs(30), c9_pd_degeneration),
        (10, "parser robustness", Duration::from_secs(30), c10_parser),
        (11, "classification sanity", Duration::from_secs(60), c11_classification),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let (pass, detail) = match result {
            Ok((pass, detail)) => (pass && took <= limit, detail),
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{id:>2}] {name}: {detail} ({:.1} s, limit {} s)",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
