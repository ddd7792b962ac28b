//! Command-line front end: fit a right-censored log-linear model to a CSV
//! dataset, run a Monte Carlo study, or print the semiparametric efficiency
//! bound.
//!
//! Exit codes: 0 success, 2 usage, 3 data validation, 4 non-convergence,
//! 5 numerical failure.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use aft_sieve::error::Error;
use aft_sieve::fitter::{fit, FitConfig, FitResult};
use aft_sieve::likelihood::{Dataset, Observation};
use aft_sieve::quadrature::gauss_legendre;
use aft_sieve::sim::{calibrate_censoring, efficiency_bound, run_study, ErrorKind, SimDesign};
use aft_sieve::variance::variance_report;

const EXIT_DATA: u8 = 3;
const EXIT_NONCONV: u8 = 4;
const EXIT_NUMERIC: u8 = 5;

#[derive(Parser)]
#[command(name = "aft-sieve", version, about = "Sieve MLE for right-censored log-linear regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model to a CSV dataset (columns: time, status, covariates).
    Fit(FitArgs),
    /// Run a Monte Carlo replication study for one design.
    Simulate(SimArgs),
    /// Print the semiparametric efficiency bound sigma* for a design.
    Bound(BoundArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Transform {
    Identity,
    Ln,
    Log10,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with a header row; `time` and `status` columns required,
    /// every other column is a covariate.
    csv: PathBuf,
    /// Transform applied to the time column before fitting.
    #[arg(long, value_enum, default_value = "identity")]
    transform: Transform,
    /// Number of interior knots.
    #[arg(long, default_value_t = 1)]
    knots: usize,
    /// Spline order (degree + 1).
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Convergence tolerance on the step and gradient norms.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Gauss-Legendre points per knot segment.
    #[arg(long, default_value_t = 10)]
    quad_points: usize,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    out: OutFormat,
    /// Output file; stdout when omitted. A run manifest is written next to
    /// the file as <output>.manifest.json.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    /// Error distribution key: a..f.
    #[arg(long)]
    dist: String,
    /// Sample size per replication.
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Number of replications (must be positive).
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Target censoring rate.
    #[arg(long, default_value_t = 0.25)]
    censor_rate: f64,
    /// Apply uniform censoring on the original time scale instead of the
    /// default log-time scale.
    #[arg(long)]
    censor_time_scale: bool,
    /// Output base path; writes <out>.csv, <out>.json, and
    /// <out>.manifest.json. Summary goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one generated dataset (replication 1) as a fit-ready CSV.
    #[arg(long)]
    emit_data: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// Error distribution key: a..f.
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Target censoring rate folded into the bound; 0 disables censoring.
    #[arg(long, default_value_t = 0.25)]
    censor_rate: f64,
    /// Apply uniform censoring on the original time scale instead of the
    /// default log-time scale.
    #[arg(long)]
    censor_time_scale: bool,
}

fn fail(code: &str, err: impl std::fmt::Display, exit: u8) -> ExitCode {
    eprintln!("error[{code}]: {err}");
    ExitCode::from(exit)
}

fn exit_for(err: &Error) -> (&'static str, u8) {
    match err {
        Error::InvalidDataset(_) | Error::EmptyResiduals => ("data", EXIT_DATA),
        Error::InvalidConfig(_) => ("usage", 2),
        Error::NonConvergence { .. } | Error::TooManyFailures { .. } => ("nonconv", EXIT_NONCONV),
        _ => ("numeric", EXIT_NUMERIC),
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("AFT_SIEVE_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => return fail("usage", "AFT_SIEVE_THREADS must be a positive integer", 2),
        }
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bound(args) => cmd_bound(args),
    }
}

// ---------------------------------------------------------------- manifest

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: &'static str,
    seed: Option<u64>,
    config: serde_json::Value,
    wall_time_ms: u128,
    diagnostics: serde_json::Value,
}

fn write_manifest(output: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    let mut path = output.as_os_str().to_owned();
    path.push(".manifest.json");
    let body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, body)
}

// ---------------------------------------------------------------- fit

#[derive(Serialize)]
struct CoefReport {
    name: String,
    estimate: f64,
    see1: f64,
    see2: f64,
    ci1_lower: f64,
    ci1_upper: f64,
    ci2_lower: f64,
    ci2_upper: f64,
}

#[derive(Serialize)]
struct HazardPoint {
    t: f64,
    log_hazard: f64,
    hazard: f64,
}

#[derive(Serialize)]
struct FitReport {
    n: usize,
    n_events: usize,
    converged: bool,
    n_iter: usize,
    loglik: f64,
    grad_norm: f64,
    domain: [f64; 2],
    interior_knots: Vec<f64>,
    spline_order: usize,
    gamma: Vec<f64>,
    coefficients: Vec<CoefReport>,
    /// 200-point grid of the fitted baseline log hazard over [a, b].
    hazard_grid: Vec<HazardPoint>,
}

fn read_table(path: &Path, transform: Transform) -> Result<(Dataset, Vec<String>), (String, u8)> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| (format!("cannot read {}: {e}", path.display()), EXIT_DATA))?;
    let headers = rdr
        .headers()
        .map_err(|e| (format!("malformed header: {e}"), EXIT_DATA))?
        .clone();
    let mut time_idx = None;
    let mut status_idx = None;
    let mut cov_cols: Vec<(usize, String)> = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        match h {
            "time" => time_idx = Some(i),
            "status" => status_idx = Some(i),
            _ => cov_cols.push((i, h.to_string())),
        }
    }
    let time_idx =
        time_idx.ok_or_else(|| ("missing required column `time`".to_string(), EXIT_DATA))?;
    let status_idx =
        status_idx.ok_or_else(|| ("missing required column `status`".to_string(), EXIT_DATA))?;
    if cov_cols.is_empty() {
        return Err(("at least one covariate column is required".into(), EXIT_DATA));
    }
    let mut obs = Vec::new();
    for (row_ix, record) in rdr.records().enumerate() {
        let row = row_ix + 2; // 1-based, after the header
        let record = record.map_err(|e| (format!("row {row}: {e}"), EXIT_DATA))?;
        let field = |i: usize| -> Result<f64, (String, u8)> {
            let raw = record
                .get(i)
                .ok_or_else(|| (format!("row {row}: missing column {}", i + 1), EXIT_DATA))?;
            if raw.trim().is_empty() {
                return Err((
                    format!("row {row}: missing value in column `{}`", &headers[i]),
                    EXIT_DATA,
                ));
            }
            raw.trim().parse::<f64>().map_err(|_| {
                (
                    format!("row {row}: column `{}` is not numeric: {raw:?}", &headers[i]),
                    EXIT_DATA,
                )
            })
        };
        let raw_time = field(time_idx)?;
        let status = field(status_idx)?;
        let delta = if status == 1.0 {
            true
        } else if status == 0.0 {
            false
        } else {
            return Err((format!("row {row}: status must be 0 or 1, got {status}"), EXIT_DATA));
        };
        let y = match transform {
            Transform::Identity => raw_time,
            Transform::Ln | Transform::Log10 => {
                if raw_time <= 0.0 {
                    return Err((
                        format!("row {row}: time must be positive under a log transform"),
                        EXIT_DATA,
                    ));
                }
                match transform {
                    Transform::Ln => raw_time.ln(),
                    _ => raw_time.log10(),
                }
            }
        };
        let mut x = Vec::with_capacity(cov_cols.len());
        for (i, _) in &cov_cols {
            x.push(field(*i)?);
        }
        obs.push(Observation {
            y,
            delta,
            x: DVector::from_vec(x),
        });
    }
    let names = cov_cols.into_iter().map(|(_, n)| n).collect();
    let data = Dataset::new(obs).map_err(|e| (e.to_string(), EXIT_DATA))?;
    Ok((data, names))
}

fn build_fit_report(data: &Dataset, names: &[String], res: &FitResult) -> Result<FitReport, Error> {
    let rule = gauss_legendre(10)?;
    let report = variance_report(data, res, &rule)?;
    let z = 1.959963984540054; // two-sided 95% normal quantile
    let mut coefficients = Vec::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        let est = res.model.beta[k];
        let (s1, s2) = (report.see1[k], report.see2[k]);
        coefficients.push(CoefReport {
            name: name.clone(),
            estimate: est,
            see1: s1,
            see2: s2,
            ci1_lower: est - z * s1,
            ci1_upper: est + z * s1,
            ci2_lower: est - z * s2,
            ci2_upper: est + z * s2,
        });
    }
    if coefficients
        .iter()
        .any(|c| !(c.see1.is_finite() && c.see2.is_finite()))
    {
        return Err(Error::InvalidConfig("non-finite standard errors".into()));
    }
    let basis = res.model.log_hazard.basis();
    let (a, b) = (basis.a(), basis.b());
    let hazard_grid = (0..200)
        .map(|i| {
            let t = a + (b - a) * i as f64 / 199.0;
            let g = res.model.log_hazard.eval(t).unwrap_or(f64::NAN);
            HazardPoint {
                t,
                log_hazard: g,
                hazard: g.exp(),
            }
        })
        .collect();
    Ok(FitReport {
        n: data.n(),
        n_events: data.n_events(),
        converged: res.converged,
        n_iter: res.n_iter,
        loglik: res.loglik,
        grad_norm: res.grad_norm,
        domain: [a, b],
        interior_knots: basis.knots().interior().to_vec(),
        spline_order: basis.order(),
        gamma: res.model.log_hazard.gamma().iter().copied().collect(),
        coefficients,
        hazard_grid,
    })
}

fn render_fit_csv(report: &FitReport) -> String {
    let mut out = String::new();
    out.push_str("section,name,estimate,see1,see2,ci1_lower,ci1_upper,ci2_lower,ci2_upper\n");
    for c in &report.coefficients {
        out.push_str(&format!(
            "coef,{},{},{},{},{},{},{},{}\n",
            c.name, c.estimate, c.see1, c.see2, c.ci1_lower, c.ci1_upper, c.ci2_lower, c.ci2_upper
        ));
    }
    for p in &report.hazard_grid {
        out.push_str(&format!("hazard_grid,{},{},{},,,,,\n", p.t, p.log_hazard, p.hazard));
    }
    out
}

fn emit(output: Option<&Path>, body: &str) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, body),
        None => std::io::stdout().write_all(body.as_bytes()),
    }
}

fn cmd_fit(args: FitArgs) -> ExitCode {
    let start = std::time::Instant::now();
    let (data, names) = match read_table(&args.csv, args.transform) {
        Ok(v) => v,
        Err((msg, code)) => return fail("data", msg, code),
    };
    let config = FitConfig {
        order: args.order,
        n_interior_knots: args.knots,
        tol: args.tol,
        quad_points: args.quad_points,
        ..FitConfig::default()
    };
    let res = match fit(&data, &config, None) {
        Ok(r) => r,
        Err(e) => {
            let (code, exit) = exit_for(&e);
            return fail(code, e, exit);
        }
    };
    if !res.converged {
        return fail(
            "nonconv",
            format!(
                "no convergence after {} iterations (gradient norm {:.3e})",
                res.n_iter, res.grad_norm
            ),
            EXIT_NONCONV,
        );
    }
    let report = match build_fit_report(&data, &names, &res) {
        Ok(r) => r,
        Err(e) => return fail("numeric", e, EXIT_NUMERIC),
    };
    let body = match args.out {
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        OutFormat::Csv => render_fit_csv(&report),
    };
    if emit(args.output.as_deref(), &body).is_err() {
        return fail("data", "cannot write output file", EXIT_DATA);
    }
    if let Some(out) = &args.output {
        let manifest = RunManifest {
            command: "fit".into(),
            version: env!("CARGO_PKG_VERSION"),
            seed: None,
            config: serde_json::json!({
                "input": args.csv.display().to_string(),
                "order": config.order,
                "knots": config.n_interior_knots,
                "tol": config.tol,
                "quad_points": config.quad_points,
            }),
            wall_time_ms: start.elapsed().as_millis(),
            diagnostics: serde_json::json!({
                "converged": res.converged,
                "n_iter": res.n_iter,
                "grad_norm": res.grad_norm,
                "extrapolation_fraction": res.extrapolation_fraction,
                "gamma_clipped": res.gamma_clipped,
                "beta_init_fallback": res.beta_init_fallback,
            }),
        };
        if write_manifest(out, &manifest).is_err() {
            return fail("data", "cannot write manifest", EXIT_DATA);
        }
    }
    ExitCode::SUCCESS
}

// ---------------------------------------------------------------- simulate

fn parse_dist(s: &str) -> Result<ErrorKind, ExitCode> {
    ErrorKind::parse(s).ok_or_else(|| fail("usage", format!("unknown distribution key {s:?}"), 2))
}

fn write_emitted_data(path: &Path, design: &SimDesign, censor_c: f64) -> Result<(), ExitCode> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(design.seed);
    rng.set_stream(1);
    let data = aft_sieve::sim::gen_dataset(design, Some(censor_c), &mut rng)
        .map_err(|e| fail("numeric", e, EXIT_NUMERIC))?;
    let mut body = String::from("time,status,x1,x2\n");
    for o in data.observations() {
        body.push_str(&format!(
            "{},{},{},{}\n",
            o.y,
            u8::from(o.delta),
            o.x[0],
            o.x[1]
        ));
    }
    std::fs::write(path, body).map_err(|_| fail("data", "cannot write dataset file", EXIT_DATA))
}

fn cmd_simulate(args: SimArgs) -> ExitCode {
    let start = std::time::Instant::now();
    let kind = match parse_dist(&args.dist) {
        Ok(k) => k,
        Err(code) => return code,
    };
    if args.reps == 0 {
        return fail("usage", "--reps must be positive", 2);
    }
    let mut design = SimDesign::new(args.n, kind, args.reps, args.seed);
    design.censor_rate_target = args.censor_rate;
    design.censor_log_scale = !args.censor_time_scale;
    if let Err(e) = design.validate() {
        return fail("usage", e, 2);
    }
    if let Some(path) = &args.emit_data {
        let censor_c =
            match calibrate_censoring(
                design.error,
                design.censor_rate_target,
                design.censor_log_scale,
                design.seed,
            ) {
                Ok(c) => c,
                Err(e) => return fail("numeric", e, EXIT_NUMERIC),
            };
        if let Err(code) = write_emitted_data(path, &design, censor_c) {
            return code;
        }
    }
    let summary = match run_study(&design) {
        Ok(s) => s,
        Err(e) => {
            let (code, exit) = exit_for(&e);
            return fail(code, e, exit);
        }
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    match &args.out {
        Some(base) => {
            let mut csv_path = base.as_os_str().to_owned();
            csv_path.push(".csv");
            let mut json_path = base.as_os_str().to_owned();
            json_path.push(".json");
            let mut csv_bytes = Vec::new();
            if summary.write_csv(&mut csv_bytes).is_err()
                || std::fs::write(&csv_path, &csv_bytes).is_err()
                || std::fs::write(&json_path, &json).is_err()
            {
                return fail("data", "cannot write output files", EXIT_DATA);
            }
            let manifest = RunManifest {
                command: "simulate".into(),
                version: env!("CARGO_PKG_VERSION"),
                seed: Some(args.seed),
                config: serde_json::to_value(&design).expect("design serializes"),
                wall_time_ms: start.elapsed().as_millis(),
                diagnostics: serde_json::json!({
                    "n_failed_fits": summary.n_failed_fits,
                    "realized_censoring": summary.realized_censoring,
                    "censor_c": summary.censor_c,
                }),
            };
            if write_manifest(base, &manifest).is_err() {
                return fail("data", "cannot write manifest", EXIT_DATA);
            }
        }
        None => {
            if summary.write_csv(std::io::stdout()).is_err() {
                return fail("data", "cannot write to stdout", EXIT_DATA);
            }
        }
    }
    ExitCode::SUCCESS
}

// ---------------------------------------------------------------- bound

fn cmd_bound(args: BoundArgs) -> ExitCode {
    let kind = match parse_dist(&args.dist) {
        Ok(k) => k,
        Err(code) => return code,
    };
    let censor_c = if args.censor_rate == 0.0 {
        None
    } else {
        match calibrate_censoring(kind, args.censor_rate, !args.censor_time_scale, 0) {
            Ok(c) => Some(c),
            Err(e) => return fail("numeric", e, EXIT_NUMERIC),
        }
    };
    match efficiency_bound(kind, args.n, censor_c, !args.censor_time_scale) {
        Ok(sigma) => {
            println!(
                "dist={} n={} sigma_star_beta1={:.6} sigma_star_beta2={:.6}",
                kind.key(),
                args.n,
                sigma[0],
                sigma[1]
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail("numeric", e, EXIT_NUMERIC),
    }
}
