//! Acceptance criteria. Each test prints one `[ACn] PASS|FAIL` line and
//! fails on FAIL. Run with `-- --nocapture` to see the lines.

mod common;

use std::time::{Duration, Instant};

use cbem::em::em_trajectory;
use cbem::plot::{build_quantile_polygon, svg_document};
use cbem::sim::sample_variance;
use cbem::{
    cb_pmf, e_step, em_fit, grid_mle, log_likelihood, m_step, run_scenario, sample, CbParams,
    EmConfig, GridSpec, Scenario, ScenarioReport,
};
use common::{soybean, soybean_path, table_datasets, TABLE};

fn report(id: &str, title: &str, failures: Vec<String>, detail: String) {
    if failures.is_empty() {
        println!("[{id}] PASS  {title}  ({detail})");
    } else {
        println!("[{id}] FAIL  {title}");
        for f in &failures {
            println!("        - {f}");
        }
        panic!("{id} failed: {}", failures.join("; "));
    }
}

fn check(failures: &mut Vec<String>, ok: bool, what: impl FnOnce() -> String) {
    if !ok {
        failures.push(what());
    }
}

fn table_reports() -> Vec<ScenarioReport> {
    TABLE
        .iter()
        .map(|row| {
            let scenario = Scenario::new(
                row.params(),
                common::SAMPLE_SIZE,
                common::REPLICATIONS,
                common::STUDY_SEED,
            )
            .unwrap();
            run_scenario(&scenario).unwrap()
        })
        .collect()
}

#[test]
fn ac1_real_data_golden_fit() {
    let mut failures = Vec::new();
    let path = soybean_path();
    let args = [
        "cbem",
        "fit",
        "--input",
        path.to_str().unwrap(),
        "--n",
        "6",
        "--start-p",
        "0.5",
        "--start-rho",
        "0.1",
        "--eps",
        "1e-15",
        "--maxits",
        "1000",
        "--format",
        "json",
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let status = cbem::cli::run(args, &mut out, &mut err);
    check(&mut failures, status == 0, || format!("exit status {status}"));
    let json: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let r = &json["results"];
    let p = r["p_hat"].as_f64().unwrap();
    let rho = r["rho_hat"].as_f64().unwrap();
    let iters = r["iterations"].as_u64().unwrap();
    let ll = r["log_likelihood"].as_f64().unwrap();
    check(&mut failures, (p - 0.5869412).abs() <= 1e-6, || format!("p_hat {p}"));
    check(&mut failures, (rho - 0.0863572).abs() <= 1e-6, || format!("rho_hat {rho}"));
    check(&mut failures, iters == 55, || format!("iterations {iters}"));
    check(&mut failures, (ll - -36.44153).abs() <= 1e-3, || format!("log-likelihood {ll}"));

    let data = soybean();
    let config = EmConfig::new(0.5, 0.1, 1000, 1e-15).unwrap();
    // Best of a few runs so scheduler noise on a loaded machine does not count.
    let elapsed = (0..5)
        .map(|_| {
            let t = Instant::now();
            let fit = em_fit(&data, &config).unwrap();
            assert_eq!(fit.iterations, 55);
            t.elapsed()
        })
        .min()
        .unwrap();
    check(&mut failures, elapsed < Duration::from_millis(10), || {
        format!("fit took {elapsed:?}")
    });
    report(
        "AC1",
        "soybean fit: p, rho, 55 iterations, log-likelihood, < 10 ms",
        failures,
        format!("p={p:.7} rho={rho:.7} iter={iters} ll={ll:.5} t={elapsed:?}"),
    );
}

#[test]
fn ac2_likelihood_fixture() {
    let mut failures = Vec::new();
    let data = soybean();
    let bayes = log_likelihood(&data, &CbParams::new(6, 0.5826, 0.1296).unwrap()).unwrap();
    let fit = em_fit(&data, &EmConfig::new(0.5, 0.1, 1000, 1e-15).unwrap()).unwrap();
    check(&mut failures, (bayes - -36.54512).abs() <= 1e-3, || {
        format!("log-likelihood at (0.5826, 0.1296) = {bayes}")
    });
    check(&mut failures, bayes < fit.log_likelihood, || {
        format!("EM {} does not beat {bayes}", fit.log_likelihood)
    });
    report(
        "AC2",
        "posterior-mean point likelihood and EM dominance",
        failures,
        format!("bayes={bayes:.5} em={:.5}", fit.log_likelihood),
    );
}

#[test]
fn ac3_simulation_table() {
    let mut failures = Vec::new();
    let start = Instant::now();
    let reports = table_reports();
    let elapsed = start.elapsed();
    let mut detail = Vec::new();
    for (row, rep) in TABLE.iter().zip(&reports) {
        let label = row.label();
        let bias_gap = (rep.p.bias - row.bias_p).abs();
        check(&mut failures, bias_gap <= 0.006, || {
            format!("{label}: bias(p) {} vs {}", rep.p.bias, row.bias_p)
        });
        let rel = (rep.p.rmse - row.rmse_p).abs() / row.rmse_p;
        check(&mut failures, rel <= 0.20, || {
            format!("{label}: rmse(p) {} vs {} ({:.1}%)", rep.p.rmse, row.rmse_p, rel * 100.0)
        });
        let se = rep.rho.mc_standard_error();
        check(&mut failures, rep.rho.bias.abs() <= 3.0 * se, || {
            format!("{label}: |bias(rho)| {} > 3 x {se}", rep.rho.bias.abs())
        });
        detail.push(format!(
            "{label} bias_p={:+.5} rmse_p={:.5} bias_rho={:+.5}",
            rep.p.bias, rep.p.rmse, rep.rho.bias
        ));
    }
    check(&mut failures, elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    });
    for line in &detail {
        println!("        {line}");
    }
    report(
        "AC3",
        "six-scenario bias/RMSE reproduction, k = 30, N = 1000",
        failures,
        format!("t={elapsed:?}"),
    );
}

#[test]
fn ac4_oracle_equivalence() {
    let mut failures = Vec::new();
    let start = Instant::now();
    let spec = GridSpec::default();
    let mut worst: f64 = 0.0;
    for (i, (params, data)) in table_datasets(50, 0x0AC4).iter().enumerate() {
        let fit = em_fit(data, &EmConfig::default()).unwrap();
        let grid = grid_mle(data, &spec).unwrap();
        let gap = fit.log_likelihood - grid.log_likelihood;
        worst = worst.max(gap.abs());
        check(&mut failures, gap.abs() <= 1e-6, || {
            format!(
                "dataset {i} ({params:?}): em {} vs grid {}",
                fit.log_likelihood, grid.log_likelihood
            )
        });
    }
    let elapsed = start.elapsed();
    check(&mut failures, elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    });
    report(
        "AC4",
        "EM log-likelihood equals grid maximum on 50 datasets",
        failures,
        format!("max gap={worst:.2e} t={elapsed:?}"),
    );
}

fn tv_distance(params: &CbParams, draws: usize, seed: u64) -> f64 {
    let data = sample(params, draws, seed).unwrap();
    let counts = data.counts();
    (0..=params.n())
        .map(|y| (counts[y as usize] as f64 / draws as f64 - cb_pmf(y, params).unwrap()).abs())
        .sum::<f64>()
        / 2.0
}

#[test]
fn ac5_property_suite() {
    let mut failures = Vec::new();

    // Normalization over n in 1..=20, p and rho on a 0.1 grid.
    let mut worst_norm: f64 = 0.0;
    for n in 1..=20 {
        for i in 0..=10 {
            for j in 0..=10 {
                let params = CbParams::new(n, i as f64 / 10.0, j as f64 / 10.0).unwrap();
                let total: f64 = (0..=n).map(|y| cb_pmf(y, &params).unwrap()).sum();
                worst_norm = worst_norm.max((total - 1.0).abs());
            }
        }
    }
    check(&mut failures, worst_norm <= 1e-12, || format!("normalization error {worst_norm}"));

    // Ascent, fixed point and responsibility support along EM runs.
    let mut datasets = vec![soybean()];
    datasets.extend(table_datasets(120, 0x0AC5).into_iter().map(|(_, d)| d));
    let starts = [(0.5, 0.5), (0.5, 0.1), (0.9, 0.9), (0.1, 0.1)];
    let mut worst_drop: f64 = 0.0;
    let mut worst_fixed: f64 = 0.0;
    for (d, data) in datasets.iter().enumerate() {
        for &(sp, sr) in &starts {
            let config = EmConfig::new(sp, sr, 1000, 1e-15).unwrap();
            let (fit, path) = em_trajectory(data, &config).unwrap();
            for w in path.windows(2) {
                worst_drop = worst_drop.max(w[0].log_likelihood - w[1].log_likelihood);
            }
            let at = CbParams::new(data.n(), fit.p_hat, fit.rho_hat).unwrap();
            let tau = e_step(data, &at).unwrap();
            let (p, rho) = m_step(data, &tau).unwrap();
            worst_fixed = worst_fixed.max((p - fit.p_hat).abs()).max((rho - fit.rho_hat).abs());
            for (i, (&y, &t)) in data.observations().iter().zip(&fit.responsibilities).enumerate() {
                let off_boundary = y != 0 && y != data.n();
                check(&mut failures, !(off_boundary && t != 0.0), || {
                    format!("dataset {d} obs {i}: tau = {t} for y = {y}")
                });
                check(&mut failures, t == 0.0 || fit.rho_hat > 0.0, || {
                    format!("dataset {d}: tau > 0 with rho_hat = 0")
                });
            }
        }
    }
    check(&mut failures, worst_drop <= 1e-12, || format!("log-likelihood drop {worst_drop}"));
    check(&mut failures, worst_fixed <= 1e-12, || format!("fixed-point residual {worst_fixed}"));

    // rmse >= |bias| and sampler TV distance per scenario.
    let reports = table_reports();
    let mut worst_tv: f64 = 0.0;
    for (row, rep) in TABLE.iter().zip(&reports) {
        for (name, s) in [("p", &rep.p), ("rho", &rep.rho)] {
            check(&mut failures, s.rmse >= s.bias.abs(), || {
                format!("{} {name}: rmse {} < |bias| {}", row.label(), s.rmse, s.bias)
            });
        }
        worst_tv = worst_tv.max(tv_distance(&row.params(), 100_000, 0x7A));
    }
    check(&mut failures, worst_tv <= 0.01, || format!("TV distance {worst_tv}"));

    // Bitwise determinism of seeded runs.
    let params = TABLE[0].params();
    check(
        &mut failures,
        sample(&params, 500, 99).unwrap() == sample(&params, 500, 99).unwrap(),
        || "sample not reproducible".into(),
    );
    let scenario = Scenario::new(params, 30, 200, 1234).unwrap();
    let a = run_scenario(&scenario).unwrap();
    let b = run_scenario(&scenario).unwrap();
    let bits = |r: &ScenarioReport| {
        r.p.estimates
            .iter()
            .chain(&r.rho.estimates)
            .map(|v| v.to_bits())
            .collect::<Vec<_>>()
    };
    check(&mut failures, a == b && bits(&a) == bits(&b), || {
        "scenario report not reproducible".into()
    });

    let svg = |r: &ScenarioReport| {
        svg_document(&[
            build_quantile_polygon("p", &r.p.estimates, 41).unwrap(),
            build_quantile_polygon("rho", &r.rho.estimates, 41).unwrap(),
        ])
        .unwrap()
    };
    check(&mut failures, svg(&a).as_bytes() == svg(&b).as_bytes(), || {
        "SVG output not reproducible".into()
    });

    report(
        "AC5",
        "normalization, ascent, fixed point, support, rmse >= |bias|, TV, determinism",
        failures,
        format!(
            "norm={worst_norm:.1e} drop={worst_drop:.1e} fixed={worst_fixed:.1e} tv={worst_tv:.4}"
        ),
    );
}

#[test]
fn ac6_trend_checks() {
    let mut failures = Vec::new();
    let reports = table_reports();
    // Rows 0 and 1 are (0.5, 0.8) at n = 10 and n = 20.
    let (r10, r20) = (reports[0].p.rmse, reports[1].p.rmse);
    check(&mut failures, r20 < r10, || {
        format!("rmse(p) n=20 {r20} not below n=10 {r10}")
    });
    let mut detail = vec![format!("rmse_p n10={r10:.4} n20={r20:.4}")];
    for (row, rep) in TABLE.iter().zip(&reports) {
        let vp = sample_variance(&rep.p.estimates);
        let vr = sample_variance(&rep.rho.estimates);
        check(&mut failures, vr >= vp, || {
            format!("{}: var(rho) {vr} < var(p) {vp}", row.label())
        });
        detail.push(format!("{} var ratio={:.2}", row.label(), vr / vp));
    }
    report(
        "AC6",
        "rmse(p) falls with n; rho estimates vary more than p",
        failures,
        detail.join(", "),
    );
}
