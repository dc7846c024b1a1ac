use penlevel::cv::CvConfig;
use penlevel::sim::{
    gen_beta, gen_design, gen_response, prediction_error, replication_data, run_experiment,
    ExperimentConfig, ExperimentReport, SimDesign, RECORD_COLUMNS,
};
use penlevel::{coverage_check, lambda_mdt, Coefficients, Family, Method};

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn design(n: usize, p: usize, rho: f64) -> SimDesign {
    SimDesign {
        n,
        p,
        rho,
        sparsity: p.min(10),
        replications: 1,
        ..SimDesign::default()
    }
}

fn small_experiment(family: Family, reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        design: SimDesign {
            n: 60,
            p: 30,
            sparsity: 5,
            family,
            replications: reps,
            base_seed: seed,
            ..SimDesign::default()
        },
        draws: 200,
        cv: CvConfig {
            folds: 5,
            grid_size: 10,
            ..CvConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

fn csv_without_timing(report: &ExperimentReport) -> String {
    let mut buf = Vec::new();
    report.write_records_csv(&mut buf).unwrap();
    String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| l.split(',').take(5).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn independent_columns_are_uncorrelated() {
    let x = gen_design(&design(2000, 5, 0.0), 1).unwrap();
    for a in 0..5 {
        for b in a + 1..5 {
            let r = corr(&x.column(a), &x.column(b));
            assert!(r.abs() <= 0.1, "cols {a},{b}: {r}");
        }
    }
}

#[test]
fn ar1_correlations_decay_geometrically() {
    let x = gen_design(&design(5000, 6, 0.5), 2).unwrap();
    for j in 0..4 {
        let r1 = corr(&x.column(j), &x.column(j + 1));
        let r2 = corr(&x.column(j), &x.column(j + 2));
        assert!((r1 - 0.5).abs() <= 0.05, "lag 1 at {j}: {r1}");
        assert!((r2 - 0.25).abs() <= 0.05, "lag 2 at {j}: {r2}");
    }
}

#[test]
fn generated_designs_are_standardized() {
    let x = gen_design(&design(37, 12, 0.5), 3).unwrap();
    assert!(x.is_standardized());
    let n = x.n() as f64;
    for j in 0..x.p() {
        let c = x.column(j);
        assert!((c.iter().sum::<f64>() / n).abs() <= 1e-10);
        assert!((c.iter().map(|v| v * v).sum::<f64>() / n - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn coefficient_draws() {
    let d = SimDesign {
        p: 50,
        sparsity: 10,
        ..SimDesign::default()
    };
    let a = gen_beta(&d, 1);
    let b = gen_beta(&d, 2);
    assert_eq!(a.support(), (0..10).collect::<Vec<_>>());
    assert_eq!(b.support(), a.support());
    assert_ne!(a, b);
    assert!(a.as_slice().iter().all(|v| v.abs() <= 1.0));
    let none = gen_beta(&SimDesign { sparsity: 0, ..d }, 1);
    assert!(none.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn responses() {
    let mut d = design(100, 20, 0.5);
    let x = gen_design(&d, 4).unwrap();
    let b = gen_beta(&d, 5);
    d.sigma = 0.0;
    let exact = gen_response(&d, &x, &b, 6).unwrap();
    assert_eq!(exact.y(), x.linear_predictor(b.as_slice()).as_slice());

    d.sigma = 1.0;
    let a = gen_response(&d, &x, &b, 6).unwrap();
    let again = gen_response(&d, &x, &b, 6).unwrap();
    assert_eq!(a.y(), again.y());
    assert_ne!(a.y(), exact.y());

    let mut pd = design(5000, 3, 0.5);
    pd.family = Family::PoissonWsf;
    let px = gen_design(&pd, 7).unwrap();
    let y = gen_response(&pd, &px, &Coefficients::zeros(3), 8).unwrap();
    let mean = y.y().iter().sum::<f64>() / 5000.0;
    assert!((mean - 1.0).abs() <= 0.05, "{mean}");
    assert!(y.y().iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
}

#[test]
fn prediction_error_properties() {
    let d = design(80, 10, 0.5);
    let x = gen_design(&d, 9).unwrap();
    let b = gen_beta(&d, 10);
    assert_eq!(prediction_error(&x, &b, &b), 0.0);
    for j in 0..10 {
        let mut e = b.as_slice().to_vec();
        e[j] += 1.0;
        let pe = prediction_error(&x, &Coefficients::new(e).unwrap(), &b);
        assert!((pe - 1.0).abs() <= 1e-12, "{pe}");
    }
    let b1 = Coefficients::new(b.as_slice().iter().map(|v| 0.5 * v + 0.1).collect()).unwrap();
    let b2 = Coefficients::new(b.as_slice().iter().map(|v| -v).collect()).unwrap();
    let gap = prediction_error(&x, &b1, &b2);
    assert!(prediction_error(&x, &b1, &b) <= prediction_error(&x, &b2, &b) + gap + 1e-15);
}

#[test]
fn single_replication_plumbing() {
    let mut cfg = small_experiment(Family::Lasso, 1, 11);
    cfg.methods = vec![Method::Mdt];
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.records.len(), 1);
    let expect = lambda_mdt(&cfg.spec().unwrap(), 60, 30).unwrap().lambda;
    assert_eq!(report.records[0].lambda, expect);

    cfg.methods = vec![Method::Mdt, Method::SteinMc, Method::Cv];
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.records.len(), 3);
    assert!(report.rng.contains("ChaCha8"));
}

#[test]
fn reports_are_reproducible() {
    for family in Family::ALL {
        let cfg = small_experiment(family, 3, 12);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(csv_without_timing(&a), csv_without_timing(&b), "{family}");
        assert_eq!(a.records.len(), 3 * cfg.methods.len() - count_failures(&a));
    }
}

fn count_failures(r: &ExperimentReport) -> usize {
    r.failures.iter().filter(|f| f.method.is_some()).count()
}

#[test]
fn records_csv_columns() {
    let report = run_experiment(&small_experiment(Family::Lasso, 2, 13)).unwrap();
    let mut buf = Vec::new();
    report.write_records_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), RECORD_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 1 + report.records.len());
    let mut json = Vec::new();
    report.write_summary_json(&mut json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["summary"].as_array().unwrap().len(), 3);
    assert!(v["rng"].is_string());
}

#[test]
fn coverage_never_drops_when_c_grows() {
    for family in [Family::Lasso, Family::SqrtLasso] {
        let mut lo = small_experiment(family, 6, 14);
        lo.methods = vec![Method::Mdt, Method::SteinMc];
        let hi = ExperimentConfig { c: 1.5, ..lo.clone() };
        let a = run_experiment(&lo).unwrap();
        let b = run_experiment(&hi).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!((ra.rep, ra.method), (rb.rep, rb.method));
            assert!((rb.lambda / ra.lambda - 1.5 / 1.01).abs() < 1e-12);
            assert!(rb.coverage || !ra.coverage);
        }
        for m in [Method::Mdt, Method::SteinMc] {
            assert!(b.summary_for(m).unwrap().coverage >= a.summary_for(m).unwrap().coverage);
        }
    }
}

#[test]
fn records_agree_with_regenerated_data() {
    for family in Family::ALL {
        let cfg = small_experiment(family, 4, 15);
        let report = run_experiment(&cfg).unwrap();
        let spec = cfg.spec().unwrap();
        for r in &report.records {
            let rep = replication_data(&cfg.design, r.rep).unwrap();
            let cov = coverage_check(&spec, &rep.data, &rep.beta_star, r.lambda).unwrap();
            assert_eq!(cov, r.coverage, "{family} rep {}", r.rep);
            assert!(r.prediction_error.is_finite() && r.prediction_error >= 0.0);
            assert!(r.select_seconds >= 0.0 && r.fit_seconds >= 0.0);
        }
    }
}

#[test]
fn frozen_coefficients_repeat_across_replications() {
    let mut d = design(40, 20, 0.5);
    d.replications = 3;
    d.freeze_beta = true;
    let a = replication_data(&d, 0).unwrap();
    let b = replication_data(&d, 2).unwrap();
    assert_eq!(a.beta_star, b.beta_star);
    assert_ne!(a.data.y(), b.data.y());
    d.freeze_beta = false;
    assert_ne!(replication_data(&d, 0).unwrap().beta_star, replication_data(&d, 2).unwrap().beta_star);
}

#[test]
fn config_json_defaults_and_flattening() {
    let cfg: ExperimentConfig = serde_json::from_str(r#"{"n": 50, "family": "sqrt-lasso", "cv": {"folds": 5}}"#).unwrap();
    assert_eq!(cfg.design.n, 50);
    assert_eq!(cfg.design.p, 1000);
    assert_eq!(cfg.design.family, Family::SqrtLasso);
    assert_eq!(cfg.cv.folds, 5);
    assert_eq!(cfg.cv.grid_size, 50);
    assert_eq!(cfg.alpha, 0.1);
    assert_eq!(cfg.c, 1.01);
    let empty: ExperimentConfig = serde_json::from_str("{}").unwrap();
    assert_eq!(empty, ExperimentConfig::default());
}
