//! Acceptance suite: one `[PASS]` / `[FAIL]` line per criterion, nonzero exit
//! status if any criterion fails. All randomness uses `DEFAULT_SEED`.

use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};

use stochstab::experiments::{list_tree, run_experiment, ExperimentConfig, Manifest, Scale, MANIFEST_FILE};
use stochstab::montecarlo::{
    fit_decay_rate, log_log_slope, pathwise_exponent, recorded_steps, run_ensemble, strong_error_study,
    EnsembleConfig, MomentSeries,
};
use stochstab::operators::{biharmonic_hinged_spectrum, degenerate_principal_eigenvalue, heat_spectrum};
use stochstab::sde::{
    discrete_second_moment_rate, discrete_second_moment_recursion, discrete_second_moment_series, exact_trajectory,
    generate_path_indexed, Discretization, StateVector,
};
use stochstab::stability::{
    as_decay_rate, as_noise_threshold, classify, moment_decay_rate, region_boundary, ModelParams, RegionKind,
};
use stochstab::DEFAULT_SEED;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within_budget(o: Outcome, elapsed: Duration, budget: Option<Duration>) -> Outcome {
    match budget {
        Some(b) if elapsed > b => outcome(false, format!("{}; over the {}s budget", o.detail, b.as_secs())),
        _ => o,
    }
}

fn manifest_in(dir: &Path) -> Manifest {
    Manifest::parse(&fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

fn num(m: &Manifest, key: &str) -> f64 {
    m.get(key).unwrap_or_else(|| panic!("manifest lacks {key}")).parse().unwrap()
}

fn desk(name: &str, dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::builtin(name, Scale::Desk).unwrap();
    c.out_dir = dir.to_path_buf();
    c
}

fn exact_law_moments() -> Outcome {
    let spectrum = biharmonic_hinged_spectrum(1).unwrap();
    let params = ModelParams::new(1.0, 2.0, 2.0).unwrap();
    let disc = Discretization::new(1, 1e-3, 0.2).unwrap();
    let y0 = StateVector::new(vec![1.0]);
    let factor = discrete_second_moment_recursion(1.0, &params, spectrum.lambda1(), 1e-3, 1).unwrap();
    let series = run_ensemble(&y0, &params, &spectrum, &disc, &EnsembleConfig::new(2000, DEFAULT_SEED)).unwrap();
    let exact =
        discrete_second_moment_series(&y0, &params, &spectrum, 1e-3, &recorded_steps(disc.n_steps(), 1)).unwrap();
    let mut worst: f64 = 0.0;
    let mut misses = 0;
    for i in 0..series.len() {
        let diff = (series.values[i] - exact[i]).abs();
        let allowed = 4.0 * series.stderr[i] + 1e-12 * exact[i];
        if diff > allowed {
            misses += 1;
        }
        if series.stderr[i] > 0.0 {
            worst = worst.max(diff / series.stderr[i]);
        }
    }
    outcome(
        misses == 0 && (factor - 0.835_195).abs() < 2e-6,
        format!(
            "per-step factor {factor:.7}; {} recorded times, {misses} outside 4 se (worst {worst:.2} se)",
            series.len()
        ),
    )
}

fn strong_convergence() -> Outcome {
    let spectrum = heat_spectrum(1).unwrap();
    let params = ModelParams::new(1.0, 1.0, 2.0).unwrap();
    let coarse = Discretization::new(1, 1.0 / 256.0, 1.0).unwrap();
    let levels =
        strong_error_study(&StateVector::new(vec![1.0]), &params, &spectrum, &coarse, 4, 64, DEFAULT_SEED, 0).unwrap();
    let pts: Vec<(f64, f64)> = levels.iter().map(|l| (l.tau, l.error)).collect();
    let order = log_log_slope(&pts).unwrap();
    let errs: Vec<String> = levels.iter().map(|l| format!("{:.2e}", l.error)).collect();
    outcome(order >= 0.4, format!("strong order {order:.3} (>= 0.4) from errors [{}] over 64 paths", errs.join(", ")))
}

fn continuous_rate_recovery() -> Outcome {
    let lambda = PI.powi(4);
    let params = ModelParams::new(1.0, 2.0, 2.0).unwrap();
    let mu = moment_decay_rate(&params, lambda).unwrap();
    let spectrum = biharmonic_hinged_spectrum(1).unwrap();
    let mut gaps = Vec::new();
    let mut fit_agrees = true;
    for j in 0..5 {
        let tau = 1e-3 / f64::from(1 << j);
        let rate = discrete_second_moment_rate(&params, lambda, tau).unwrap();
        let steps: Vec<usize> = (0..=200).collect();
        let values =
            discrete_second_moment_series(&StateVector::new(vec![1.0]), &params, &spectrum, tau, &steps).unwrap();
        let series = MomentSeries {
            times: steps.iter().map(|&n| n as f64 * tau).collect(),
            stderr: vec![0.0; values.len()],
            values,
            n_paths: 0,
            p: 2.0,
        };
        let fit = fit_decay_rate(&series, (0.0, 200.0 * tau)).unwrap();
        fit_agrees &= (fit.rate - rate).abs() < 1e-9 * rate;
        gaps.push((rate - mu).abs() / mu);
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = *gaps.last().unwrap();
    let shown: Vec<String> = gaps.iter().map(|g| format!("{:.3}%", 100.0 * g)).collect();
    outcome(
        monotone && last < 0.05 && fit_agrees && (mu - 188.818).abs() < 1e-3,
        format!("mu_2 = {mu:.3}; relative gaps [{}] over 4 halvings from tau = 1e-3", shown.join(", ")),
    )
}

fn noise_intensity_reproduction() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    run_experiment(&desk("test1_noise_intensity", tmp.path()), 0).unwrap();
    let m = manifest_in(tmp.path());
    let mut rates = Vec::new();
    let mut ok = true;
    let mut parts = Vec::new();
    for b1 in ["2", "6", "9"] {
        let prefix = format!("derived.beta0_1_beta1_{b1}.p_2");
        let rate = num(&m, &format!("{prefix}.fit_rate"));
        let se = num(&m, &format!("{prefix}.fit_rate_stderr"));
        let exact = num(&m, &format!("{prefix}.discrete_rate"));
        let close = (rate - exact).abs() <= 4.0 * se;
        ok &= rate > 0.0 && close;
        parts.push(format!(
            "beta1={b1}: {rate:.1} +- {se:.1} vs {exact:.1}{}",
            if close { "" } else { " (outside 4 se)" }
        ));
        rates.push(rate);
    }
    let decreasing = rates.windows(2).all(|w| w[1] < w[0]);
    if !decreasing {
        parts.push("rates not strictly decreasing in beta1".into());
    }
    outcome(ok && decreasing, parts.join("; "))
}

fn moment_order_reproduction() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = desk("test2_moment_orders", tmp.path());
    run_experiment(&cfg, 0).unwrap();
    let m = manifest_in(tmp.path());
    let pre = "derived.beta0_1_beta1_11";
    let decays = ["p_1", "p_2"].iter().all(|p| num(&m, &format!("{pre}.{p}.final_ratio")) < 1.0);
    let lambda = PI.powi(4);
    let v3 = classify(&ModelParams::new(1.0, 11.0, 3.0).unwrap(), lambda).unwrap();
    let recorded = m.get(&format!("{pre}.p_3.moment_stable")) == Some("false");
    let peak = num(&m, &format!("{pre}.p_3.peak_ratio"));
    let peak_t = num(&m, &format!("{pre}.p_3.peak_time"));
    outcome(
        decays && !v3.moment_stable && recorded && peak > 1.0 && peak_t > 0.0 && peak_t < cfg.horizon,
        format!(
            "p=1,2 final ratios {:.2e}, {:.2e}; p=3 unstable (242 > {:.1}), recorded {recorded}, peak {peak:.2}x at t = {peak_t}",
            num(&m, &format!("{pre}.p_1.final_ratio")),
            num(&m, &format!("{pre}.p_2.final_ratio")),
            2.0 * (lambda - 1.0)
        ),
    )
}

fn pathwise_stabilization() -> Outcome {
    let lambda = PI.powi(4);
    let params = ModelParams::new(100.0, 2.7, 1.0).unwrap();
    let v = classify(&params, lambda).unwrap();
    let spectrum = biharmonic_hinged_spectrum(1).unwrap();
    let disc = Discretization::new(1, 1e-2, 50.0).unwrap();
    let y0 = StateVector::new(vec![1.0]);
    let n_paths = 32;
    let mut sum = 0.0;
    for i in 0..n_paths {
        let path = generate_path_indexed(DEFAULT_SEED, i, &disc);
        let traj = exact_trajectory(&y0, &params, &spectrum, &path).unwrap();
        sum += pathwise_exponent(&traj.norm_pow_series(1.0), 0.1).unwrap();
    }
    let mean = sum / n_paths as f64;
    let target = -as_decay_rate(&params, lambda).unwrap();
    let tol = 3.0 * 2.7 / (50.0f64 * n_paths as f64).sqrt();
    outcome(
        !v.moment_stable && v.as_stable && (mean - target).abs() <= tol,
        format!(
            "moment-stable {}, a.s.-stable {} (7.29 > {:.3}); mean exponent {mean:.4} vs {target:.4} +- {tol:.4}",
            v.moment_stable,
            v.as_stable,
            2.0 * (100.0 - lambda)
        ),
    )
}

fn sharpness() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = desk("test5_sharpness", tmp.path());
    run_experiment(&cfg, 0).unwrap();
    let m = manifest_in(tmp.path());
    let lambda = PI.powi(4);
    let threshold = as_noise_threshold(97.8, lambda);
    let mut ok = (threshold - 0.8843).abs() < 1e-4 && 0.5 < threshold && threshold < 1.5;
    let mut parts = vec![format!("threshold {threshold:.4}")];
    for (b1, tok, expected, sign) in [(0.5, "0p5", 0.266, 1.0), (1.5, "1p5", -0.734, -1.0)] {
        let pre = format!("derived.beta0_97p8_beta1_{tok}.exact_path_0");
        let e = num(&m, &format!("{pre}.p_1.pathwise_exponent"));
        let w = num(&m, &format!("{pre}.brownian_end"));
        let verdict = classify(&ModelParams::new(97.8, b1, 1.0).unwrap(), lambda).unwrap();
        let sign_ok = e * sign > 0.0 && verdict.as_stable == (sign < 0.0);
        let close = (e - expected).abs() <= 0.15;
        ok &= sign_ok && close;
        parts.push(format!(
            "beta1={b1}: {e:+.4} vs {expected:+.3} +- 0.15{}{} (noise term beta1 W(T)/T = {:+.3})",
            if sign_ok { "" } else { ", wrong sign" },
            if close { "" } else { ", outside tolerance" },
            b1 * w / cfg.horizon
        ));
    }
    outcome(ok, parts.join("; "))
}

fn region_figures() -> Outcome {
    let pi2 = PI * PI;
    let intercept = region_boundary(RegionKind::MomentMe, pi2, 2.0, &[0.0]).unwrap()[0];
    let curve = region_boundary(RegionKind::AlmostSure, 1.0, 2.0, &[2.0]).unwrap()[0];
    let tmp = tempfile::tempdir().unwrap();
    run_experiment(&desk("regions", tmp.path()), 0).unwrap();
    let m = manifest_in(tmp.path());
    let recorded = num(&m, "derived.moment_boundary_p_2.intercept");

    let mut runner = TestRunner::new(PropConfig { cases: 1000, failure_persistence: None, ..PropConfig::default() });
    let strategy = (-200.0..200.0f64, -20.0..20.0f64, 1.0..6.0f64, 0.01..200.0f64);
    let agree = runner.run(&strategy, |(b0, b1, p, l)| {
        let v = classify(&ModelParams::new(b0, b1, p).unwrap(), l).unwrap();
        prop_assert_eq!(v.moment_stable, (p - 1.0) * b1 * b1 < 2.0 * (l - b0));
        prop_assert_eq!(v.as_stable, b1 * b1 > 2.0 * (b0 - l));
        Ok(())
    });
    outcome(
        intercept == (0.0, pi2) && recorded == pi2 && curve == (2.0, 3.0) && agree.is_ok(),
        format!(
            "intercept beta0 = {} (pi^2 = {pi2}); lambda1=1, beta1=2 gives beta0 = {}; 1000 random verdicts {}",
            intercept.1,
            curve.1,
            if agree.is_ok() { "agree" } else { "disagree" }
        ),
    )
}

fn degenerate_eigenvalue() -> Outcome {
    let l0 = degenerate_principal_eigenvalue(0.0, 4096).unwrap();
    let rel = (l0 - PI * PI).abs() / (PI * PI);
    let alphas = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5];
    let at = |grid: usize| -> Vec<f64> {
        alphas.iter().map(|&a| degenerate_principal_eigenvalue(a, grid).unwrap()).collect()
    };
    let (g1, g2, g3) = (at(1024), at(2048), at(4096));
    let non_increasing = g3.windows(2).all(|w| w[1] <= w[0]);
    let convergent = (0..alphas.len()).all(|i| (g3[i] - g2[i]).abs() <= (g2[i] - g1[i]).abs() + 1e-12 * g3[i]);
    let shown: Vec<String> = alphas.iter().zip(&g3).map(|(a, l)| format!("{a}: {l:.5}")).collect();
    outcome(
        rel < 1e-3 && non_increasing && convergent,
        format!(
            "alpha=0 relative error {rel:.2e}; grid 4096 [{}]; non-increasing {non_increasing}, refinement differences shrink {convergent}",
            shown.join(", ")
        ),
    )
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    list_tree(dir)
        .unwrap()
        .into_iter()
        .map(|rel| (rel.display().to_string(), fs::read(dir.join(&rel)).unwrap()))
        .collect()
}

fn reproducibility() -> Outcome {
    let names = [
        "test1_noise_intensity",
        "test2_moment_orders",
        "test3_pathwise_stabilization",
        "test4_power_sensitivity",
        "test5_sharpness",
        "regions",
        "convergence",
    ];
    let mut differing = Vec::new();
    let mut files = 0;
    for name in names {
        let runs: Vec<_> = [1usize, 8, 1]
            .iter()
            .map(|&workers| {
                let tmp = tempfile::tempdir().unwrap();
                let mut cfg = desk(name, tmp.path());
                cfg.format = stochstab::experiments::OutputFormat::Both;
                run_experiment(&cfg, workers).unwrap();
                tree_bytes(tmp.path())
            })
            .collect();
        files += runs[0].len();
        if runs[0] != runs[1] || runs[0] != runs[2] {
            differing.push(name);
        }
    }
    outcome(
        differing.is_empty(),
        format!(
            "{} experiments x (workers 1, 8, 1 again): {files} files per run set, {} differing",
            names.len(),
            if differing.is_empty() { "none".to_string() } else { differing.join(", ") }
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact-law moment check", exact_law_moments, Some(10)),
        ("strong convergence order", strong_convergence, Some(30)),
        ("continuous-rate recovery", continuous_rate_recovery, Some(1)),
        ("noise intensity vs decay rate (test1)", noise_intensity_reproduction, Some(60)),
        ("moment order sensitivity (test2)", moment_order_reproduction, None),
        ("pathwise stabilization", pathwise_stabilization, Some(30)),
        ("almost-sure sharpness (test5)", sharpness, None),
        ("stability-region boundaries", region_figures, None),
        ("degenerate principal eigenvalue", degenerate_eigenvalue, None),
        ("reproducibility across runs and workers", reproducibility, None),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let o = match result {
            Ok(o) => within_budget(o, elapsed, budget.map(Duration::from_secs)),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                outcome(false, format!("panicked: {msg}"))
            }
        };
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {:>2}: {name} ({:.2}s) -- {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
