use std::fs::File;
use std::io::{BufWriter, ErrorKind, Write};
use std::path::Path;

use penlevel::cv::{cv_path, CvConfig};
use penlevel::io::{load_combined, load_split, write_column};
use penlevel::sim::{run_experiment, ExperimentConfig, ExperimentReport};
use penlevel::{
    fit, kkt_residual, lambda_mdt, lambda_stein, standardize, Dataset, Family, Method,
    PenaltyEstimate, ProblemSpec, SolverConfig,
};
use serde_json::{json, Value};

use crate::args::{
    CvArgs, DataArgs, EstimateArgs, EstimateMethod, FitArgs, FoldArgs, SelectMethod, SimulateArgs,
    SolverArgs, SpecArgs,
};

pub enum CliError {
    /// Bad flags or configuration values; exit code 2.
    Usage(String),
    /// Failure while running; exit code 1.
    Runtime(String),
}

impl From<penlevel::Error> for CliError {
    fn from(e: penlevel::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

const BUNDLED: [(&str, &str); 3] = [
    ("paper-lasso", include_str!("../configs/paper-lasso.json")),
    ("paper-sqrt-lasso", include_str!("../configs/paper-sqrt-lasso.json")),
    ("paper-poisson", include_str!("../configs/paper-poisson.json")),
];

fn seed_or_random(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    emit(&format!("{text}\n"))
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(CliError::Runtime(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn build_spec(args: &SpecArgs, alpha_required: bool) -> Result<ProblemSpec> {
    let alpha = match (args.alpha, alpha_required) {
        (Some(a), _) => a,
        (None, true) => return Err(usage("missing required flag --alpha")),
        // unused by cross-validation and fixed-λ fits
        (None, false) => 0.1,
    };
    if args.family != Family::Lasso && args.sigma.is_some() {
        return Err(usage(format!("--sigma applies to the lasso only, not {}", args.family)));
    }
    ProblemSpec::for_family(args.family, alpha, args.c, args.sigma.unwrap_or(1.0))
        .map_err(|e| usage(e.to_string()))
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig> {
    let cfg = SolverConfig {
        tol: args.tol,
        max_sweeps: args.max_sweeps,
        sqrt_lasso_outer_iters: args.outer_iters,
        line_search_shrink: args.shrink,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn cv_config(args: &FoldArgs, seed: u64, n: usize) -> Result<CvConfig> {
    let cfg = CvConfig {
        folds: args.folds,
        grid_size: args.grid_size,
        grid_min_ratio: args.grid_min_ratio,
        seed,
        warm_start: !args.no_warm_start,
    };
    cfg.validate(n).map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn check_draws(draws: usize) -> Result<()> {
    if draws < penlevel::penalty::MIN_DRAWS {
        return Err(usage(format!("--draws must be at least {}", penlevel::penalty::MIN_DRAWS)));
    }
    Ok(())
}

/// Loads the data; `need_y` requires a response. The design is returned
/// unstandardized.
fn load(args: &DataArgs, need_y: bool) -> Result<Option<Dataset>> {
    let d = match (&args.data, &args.x) {
        (Some(path), _) => load_combined(path, args.skip_header)?,
        (None, Some(x)) => {
            if need_y && args.y.is_none() {
                return Err(usage("a response is required: pass --y or use --data"));
            }
            load_split(x, args.y.as_deref(), args.skip_header)?
        }
        (None, None) => return Ok(None),
    };
    Ok(Some(d))
}

fn load_standardized(args: &DataArgs, need_y: bool, what: &str) -> Result<Dataset> {
    match load(args, need_y)? {
        Some(d) => Ok(standardize(&d)?),
        None => Err(usage(format!("{what} needs data: pass --x (and --y) or --data"))),
    }
}

pub fn estimate(args: &EstimateArgs) -> Result<()> {
    let spec = build_spec(&args.spec, true)?;
    let est = match args.method {
        EstimateMethod::Mdt => {
            let (n, p) = match load(&args.data, false)? {
                Some(d) => (d.n(), d.p()),
                None => match (args.n, args.p) {
                    (Some(n), Some(p)) => (n, p),
                    _ => return Err(usage("--method mdt needs --n and --p, or --x")),
                },
            };
            lambda_mdt(&spec, n, p).map_err(|e| usage(e.to_string()))?
        }
        EstimateMethod::Stein => {
            if args.n.is_some() || args.p.is_some() {
                return Err(usage("--n/--p apply to --method mdt only"));
            }
            check_draws(args.draws)?;
            let data = load_standardized(&args.data, false, "--method stein")?;
            lambda_stein(&spec, &data, args.draws, seed_or_random(args.seed))?
        }
    };
    print_json(&est)
}

pub fn fit_cmd(args: &FitArgs) -> Result<bool> {
    let needs_alpha = matches!(args.method, Some(SelectMethod::Mdt | SelectMethod::Stein));
    let spec = build_spec(&args.spec, needs_alpha)?;
    let solver = solver_config(&args.solver)?;
    if let Some(l) = args.lambda {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(usage(format!("--lambda = {l} must be finite and >= 0")));
        }
    }
    let data = load_standardized(&args.data, true, "fit")?;

    let penalty: Option<PenaltyEstimate> = match args.method {
        None => None,
        Some(SelectMethod::Mdt) => Some(lambda_mdt(&spec, data.n(), data.p())?),
        Some(SelectMethod::Stein) => {
            check_draws(args.draws)?;
            Some(lambda_stein(&spec, &data, args.draws, seed_or_random(args.seed))?)
        }
        Some(SelectMethod::Cv) => {
            let cfg = cv_config(&args.cv, seed_or_random(args.seed), data.n())?;
            Some(penlevel::cv::cv_select(&spec, &data, &cfg, &solver)?)
        }
    };
    let lambda = penalty.as_ref().map_or_else(|| args.lambda.unwrap_or(0.0), |p| p.lambda);

    let result = fit(spec.family, &data, lambda, &solver)?;
    if !result.converged {
        eprintln!(
            "warning: not converged after {} iterations (kkt residual {:.3e} > tol {:.1e})",
            result.iterations, result.kkt_residual, solver.tol
        );
    }
    if let Some(path) = &args.out_beta {
        let file = File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        write_column(BufWriter::new(file), result.beta.as_slice())?;
    }

    let mut out = serde_json::to_value(&result).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut ok = true;
    if let Value::Object(map) = &mut out {
        if let Some(p) = &penalty {
            map.insert("penalty".into(), serde_json::to_value(p).expect("plain data"));
        }
        if args.verify {
            let r = kkt_residual(&spec, &data, &result.beta, lambda)?;
            let pass = r <= solver.tol;
            map.insert("verify".into(), json!({ "kkt_residual": r, "tol": solver.tol, "pass": pass }));
            if result.converged && !pass {
                eprintln!("error: recomputed kkt residual {r:.3e} exceeds tol {:.1e}", solver.tol);
                ok = false;
            }
        }
    }
    print_json(&out)?;
    Ok(ok)
}

pub fn cv_cmd(args: &CvArgs) -> Result<()> {
    let spec = build_spec(&args.spec, false)?;
    let solver = solver_config(&args.solver)?;
    let data = load_standardized(&args.data, true, "cv")?;
    let cfg = cv_config(&args.cv, seed_or_random(args.seed), data.n())?;
    let outcome = cv_path(&spec, &data, &cfg, &solver)?;
    if let Some(path) = &args.loss_table {
        let file = File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        outcome.write_loss_table(BufWriter::new(file))?;
    }
    print_json(&outcome.estimate)
}

fn read_config(name: &str) -> Result<Value> {
    let text = if Path::new(name).exists() {
        std::fs::read_to_string(name).map_err(|e| CliError::Runtime(format!("{name}: {e}")))?
    } else {
        let key = name.trim_end_matches(".json");
        match BUNDLED.iter().find(|(k, _)| *k == key) {
            Some((_, text)) => text.to_string(),
            None => return Err(usage(format!("config '{name}' is neither a file nor a bundled config"))),
        }
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("config '{name}': {e}")))
}

fn experiment_config(args: &SimulateArgs) -> Result<ExperimentConfig> {
    let raw = match &args.config {
        Some(name) => read_config(name)?,
        None => json!({}),
    };
    let seed_in_config = raw.get("base_seed").is_some();
    let mut cfg: ExperimentConfig =
        serde_json::from_value(raw).map_err(|e| usage(format!("config: {e}")))?;

    let d = &mut cfg.design;
    macro_rules! set {
        ($target:expr, $flag:expr) => {
            if let Some(v) = $flag.clone() {
                $target = v;
            }
        };
    }
    set!(d.family, args.family);
    set!(d.n, args.n);
    set!(d.p, args.p);
    set!(d.rho, args.rho);
    set!(d.sparsity, args.sparsity);
    set!(d.sigma, args.sigma);
    set!(d.replications, args.replications);
    d.freeze_beta |= args.freeze_beta;
    d.base_seed = match args.base_seed {
        Some(s) => s,
        None if seed_in_config => d.base_seed,
        None => rand::random(),
    };
    set!(cfg.methods, args.methods);
    set!(cfg.alpha, args.alpha);
    set!(cfg.c, args.c);
    set!(cfg.draws, args.draws);
    set!(cfg.cv.folds, args.folds);
    set!(cfg.cv.grid_size, args.grid_size);

    let check = |r: penlevel::Result<()>| r.map_err(|e| usage(e.to_string()));
    check(cfg.design.validate())?;
    check(cfg.spec().map(|_| ()))?;
    check(cfg.solver.validate())?;
    check(cfg.cv.validate(cfg.design.n))?;
    if cfg.methods.is_empty() {
        return Err(usage("no methods requested"));
    }
    if cfg.methods.contains(&Method::SteinMc) {
        check_draws(cfg.draws)?;
    }
    Ok(cfg)
}

fn summary_table(report: &ExperimentReport) -> String {
    let mut out = format!(
        "base_seed {}  family {}  n {}  p {}  replications {}\n{:<10} {:>12} {:>10} {:>14} {:>8}\n",
        report.config.design.base_seed,
        report.config.design.family,
        report.config.design.n,
        report.config.design.p,
        report.config.design.replications,
        "method",
        "median_pe",
        "coverage",
        "select_secs",
        "records"
    );
    for s in &report.summary {
        out.push_str(&format!(
            "{:<10} {:>12.4} {:>10.3} {:>14.4} {:>8}\n",
            s.method.as_str(),
            s.median_prediction_error,
            s.coverage,
            s.total_select_seconds,
            s.successes
        ));
    }
    out
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = experiment_config(args)?;
    let report = run_experiment(&cfg)?;
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", args.out_dir.display()));
    std::fs::create_dir_all(&args.out_dir).map_err(io)?;
    let summary = File::create(args.out_dir.join("summary.json")).map_err(io)?;
    report.write_summary_json(BufWriter::new(summary))?;
    let records = File::create(args.out_dir.join("records.csv")).map_err(io)?;
    report.write_records_csv(BufWriter::new(records))?;
    for f in &report.failures {
        let method = f.method.map_or("data", Method::as_str);
        eprintln!("warning: replication {} ({method}) failed: {}", f.rep, f.message);
    }
    emit(&summary_table(&report))
}
