//! Monte Carlo study engine: data generation under six error laws,
//! censoring calibration, replication, summary statistics, and the
//! theoretical efficiency bound sigma*.
//!
//! Failure times follow `log T = 2 + X1 + X2 + e0` with X1 ~ Bernoulli(0.5)
//! and X2 ~ N(0, 0.5^2) truncated at +/-2; censoring times are uniform on
//! [0, c] on the original time scale with c calibrated to the target
//! censoring rate.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::error::{Error, Result};
use crate::fitter::{fit, FitConfig};
use crate::likelihood::{Dataset, Observation};
use crate::quadrature::gauss_legendre;
use crate::variance::variance_report;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// True slope parameters and intercept of the generating model.
pub const TRUE_BETA: [f64; 2] = [1.0, 1.0];
pub const INTERCEPT: f64 = 2.0;
const X2_SD: f64 = 0.5;
const X2_TRUNC: f64 = 2.0;

/// The six error laws of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorKind {
    /// (a) N(0, 1).
    StdNormal,
    /// (b) standard extreme value, F(t) = 1 - exp(-e^t).
    StdExtremeValue,
    /// (c) 0.5 N(0,1) + 0.5 N(0, 3^2).
    MixWide,
    /// (d) 0.95 N(0,1) + 0.05 N(0, 3^2).
    MixContaminated,
    /// (e) Gumbel(-0.5 mu, 0.5) with mu the Euler constant (zero mean).
    GumbelHalf,
    /// (f) 0.5 N(0,1) + 0.5 N(-1, 0.5^2).
    MixShifted,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 6] = [
        ErrorKind::StdNormal,
        ErrorKind::StdExtremeValue,
        ErrorKind::MixWide,
        ErrorKind::MixContaminated,
        ErrorKind::GumbelHalf,
        ErrorKind::MixShifted,
    ];

    /// Single-letter key a..f used by the study tables and the CLI.
    pub fn key(&self) -> &'static str {
        match self {
            ErrorKind::StdNormal => "a",
            ErrorKind::StdExtremeValue => "b",
            ErrorKind::MixWide => "c",
            ErrorKind::MixContaminated => "d",
            ErrorKind::GumbelHalf => "e",
            ErrorKind::MixShifted => "f",
        }
    }

    pub fn parse(s: &str) -> Option<ErrorKind> {
        match s.to_ascii_lowercase().as_str() {
            "a" | "std_normal" | "normal" => Some(ErrorKind::StdNormal),
            "b" | "std_extreme_value" | "extreme_value" => Some(ErrorKind::StdExtremeValue),
            "c" | "mix_05_n01_n09" | "mix_wide" => Some(ErrorKind::MixWide),
            "d" | "mix_095_n01_n09" | "mix_contaminated" => Some(ErrorKind::MixContaminated),
            "e" | "gumbel_half" | "gumbel" => Some(ErrorKind::GumbelHalf),
            "f" | "mix_shifted_normal" | "mix_shifted" => Some(ErrorKind::MixShifted),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ErrorKind::StdNormal => "N(0,1)",
            ErrorKind::StdExtremeValue => "standard extreme-value",
            ErrorKind::MixWide => "0.5N(0,1)+0.5N(0,3^2)",
            ErrorKind::MixContaminated => "0.95N(0,1)+0.05N(0,3^2)",
            ErrorKind::GumbelHalf => "Gumbel(-0.5mu,0.5)",
            ErrorKind::MixShifted => "0.5N(0,1)+0.5N(-1,0.5^2)",
        }
    }
}

/// Error distribution with density, survival, hazard, and the derivative of
/// the log hazard available analytically.
#[derive(Debug, Clone, Copy)]
pub struct ErrorDistribution {
    pub kind: ErrorKind,
}

fn normal_pdf(t: f64, mu: f64, sd: f64) -> f64 {
    let z = (t - mu) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

fn normal_cdf(t: f64, mu: f64, sd: f64) -> f64 {
    0.5 * (1.0 + erf((t - mu) / (sd * std::f64::consts::SQRT_2)))
}

fn normal_survival(t: f64, mu: f64, sd: f64) -> f64 {
    0.5 * erfc((t - mu) / (sd * std::f64::consts::SQRT_2))
}

impl ErrorDistribution {
    pub fn new(kind: ErrorKind) -> Self {
        Self { kind }
    }

    /// Normal mixture components (weight, mean, sd), when applicable.
    fn components(&self) -> Option<&'static [(f64, f64, f64)]> {
        match self.kind {
            ErrorKind::StdNormal => Some(&[(1.0, 0.0, 1.0)]),
            ErrorKind::MixWide => Some(&[(0.5, 0.0, 1.0), (0.5, 0.0, 3.0)]),
            ErrorKind::MixContaminated => Some(&[(0.95, 0.0, 1.0), (0.05, 0.0, 3.0)]),
            ErrorKind::MixShifted => Some(&[(0.5, 0.0, 1.0), (0.5, -1.0, 0.5)]),
            _ => None,
        }
    }

    fn gumbel_params(&self) -> (f64, f64) {
        (-0.5 * EULER_GAMMA, 0.5)
    }

    pub fn pdf(&self, t: f64) -> f64 {
        match self.kind {
            ErrorKind::StdExtremeValue => (t - t.exp()).exp(),
            ErrorKind::GumbelHalf => {
                let (loc, scale) = self.gumbel_params();
                let z = (t - loc) / scale;
                ((-z - (-z).exp()).exp()) / scale
            }
            _ => self
                .components()
                .unwrap()
                .iter()
                .map(|&(w, mu, sd)| w * normal_pdf(t, mu, sd))
                .sum(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self.kind {
            ErrorKind::StdExtremeValue => -(-t.exp()).exp_m1(),
            ErrorKind::GumbelHalf => {
                let (loc, scale) = self.gumbel_params();
                (-((-(t - loc) / scale).exp())).exp()
            }
            _ => self
                .components()
                .unwrap()
                .iter()
                .map(|&(w, mu, sd)| w * normal_cdf(t, mu, sd))
                .sum(),
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        match self.kind {
            ErrorKind::StdExtremeValue => (-t.exp()).exp(),
            ErrorKind::GumbelHalf => {
                let (loc, scale) = self.gumbel_params();
                -(-((-(t - loc) / scale).exp())).exp_m1()
            }
            _ => self
                .components()
                .unwrap()
                .iter()
                .map(|&(w, mu, sd)| w * normal_survival(t, mu, sd))
                .sum(),
        }
    }

    pub fn hazard(&self, t: f64) -> f64 {
        self.pdf(t) / self.survival(t)
    }

    /// d/dt log hazard = f'/f + hazard.
    pub fn log_hazard_deriv(&self, t: f64) -> f64 {
        match self.kind {
            ErrorKind::StdExtremeValue => 1.0,
            ErrorKind::GumbelHalf => {
                let (loc, scale) = self.gumbel_params();
                let z = (t - loc) / scale;
                ((-z).exp() - 1.0) / scale + self.hazard(t)
            }
            _ => {
                let comps = self.components().unwrap();
                let f: f64 = comps.iter().map(|&(w, mu, sd)| w * normal_pdf(t, mu, sd)).sum();
                let fp: f64 = comps
                    .iter()
                    .map(|&(w, mu, sd)| -w * (t - mu) / (sd * sd) * normal_pdf(t, mu, sd))
                    .sum();
                fp / f + self.hazard(t)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            ErrorKind::StdExtremeValue => {
                let u = loop {
                    let u: f64 = rng.gen();
                    if u > 0.0 {
                        break u;
                    }
                };
                (-(u.ln())).ln()
            }
            ErrorKind::GumbelHalf => {
                let (loc, scale) = self.gumbel_params();
                let u = loop {
                    let u: f64 = rng.gen();
                    if u > 0.0 {
                        break u;
                    }
                };
                loc - scale * (-(u.ln())).ln()
            }
            _ => {
                let comps = self.components().unwrap();
                let coin: f64 = rng.gen();
                let mut acc = 0.0;
                for &(w, mu, sd) in comps {
                    acc += w;
                    if coin < acc {
                        return Normal::new(mu, sd).unwrap().sample(rng);
                    }
                }
                let &(_, mu, sd) = comps.last().unwrap();
                Normal::new(mu, sd).unwrap().sample(rng)
            }
        }
    }

    /// Bisection solve of a monotone tail equation; used to bound the
    /// numerical-integration window.
    fn solve_monotone<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
        // f decreasing in t (survival); find t with f(t) = target.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Integration window: lower point with cdf 1e-10, upper at the 1e-6
    /// survival quantile.
    pub fn support_window(&self) -> (f64, f64) {
        let lo = Self::solve_monotone(|t| self.survival(t), 1.0 - 1e-10, -80.0, 80.0);
        let hi = Self::solve_monotone(|t| self.survival(t), 1e-6, -80.0, 80.0);
        (lo, hi)
    }
}

/// Draw one error variate.
pub fn sample_error<R: Rng + ?Sized>(dist: &ErrorDistribution, rng: &mut R) -> f64 {
    dist.sample(rng)
}

/// X1 ~ Bernoulli(0.5), X2 ~ N(0, 0.5^2) truncated at +/-2 (rejection).
pub fn sample_covariates<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let x1 = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
    let normal = Normal::new(0.0, X2_SD).unwrap();
    let x2 = loop {
        let v = normal.sample(rng);
        if v.abs() <= X2_TRUNC {
            break v;
        }
    };
    (x1, x2)
}

/// Monte Carlo design for one table row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimDesign {
    pub n: usize,
    pub error: ErrorKind,
    pub n_reps: usize,
    pub censor_rate_target: f64,
    pub seed: u64,
    /// Apply the uniform censoring law on the log scale (the scale of the
    /// linear model, the default) rather than the original time scale.
    pub censor_log_scale: bool,
}

impl SimDesign {
    pub fn new(n: usize, error: ErrorKind, n_reps: usize, seed: u64) -> Self {
        Self {
            n,
            error,
            n_reps,
            censor_rate_target: 0.25,
            seed,
            censor_log_scale: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 {
            return Err(Error::InvalidConfig("n_reps must be positive".into()));
        }
        if self.n < 20 {
            return Err(Error::InvalidConfig("sample size too small".into()));
        }
        if !(0.0..1.0).contains(&self.censor_rate_target) {
            return Err(Error::InvalidConfig(
                "censoring target must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Interior-knot policy of the study: one interior knot below n = 600, two
/// at or above.
pub fn knot_policy(n: usize) -> usize {
    if n >= 600 {
        2
    } else {
        1
    }
}

fn log_censor_time<R: Rng + ?Sized>(c: f64, log_scale: bool, rng: &mut R) -> f64 {
    let u = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    if log_scale {
        // Uniform [0, c] directly on the log scale.
        c * u
    } else {
        // C' = log(c U) for C uniform on [0, c].
        c.ln() + u.ln()
    }
}

/// Generate one dataset on the transformed (log) scale; `censor_c = None`
/// keeps every observation uncensored.
pub fn gen_dataset<R: Rng + ?Sized>(
    design: &SimDesign,
    censor_c: Option<f64>,
    rng: &mut R,
) -> Result<Dataset> {
    let dist = ErrorDistribution::new(design.error);
    let mut obs = Vec::with_capacity(design.n);
    for _ in 0..design.n {
        let (x1, x2) = sample_covariates(rng);
        let e = dist.sample(rng);
        let t = INTERCEPT + TRUE_BETA[0] * x1 + TRUE_BETA[1] * x2 + e;
        let (y, delta) = match censor_c {
            Some(c) => {
                let cc = log_censor_time(c, design.censor_log_scale, rng);
                (t.min(cc), t <= cc)
            }
            None => (t, true),
        };
        obs.push(Observation {
            y,
            delta,
            x: DVector::from_vec(vec![x1, x2]),
        });
    }
    Dataset::new(obs)
}

/// Calibrate the censoring bound `c` so that the censoring rate hits
/// `target`: bisection on log c over 10^6 Monte Carlo draws of the log
/// failure time. With `log_scale` the censoring variable is uniform [0, c]
/// on the log scale; otherwise uniform [0, c] on the original time scale.
pub fn calibrate_censoring(
    error: ErrorKind,
    target: f64,
    log_scale: bool,
    seed: u64,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::CensoringBracketing { target });
    }
    let dist = ErrorDistribution::new(error);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_draws = 1_000_000usize;
    let logt: Vec<f64> = (0..n_draws)
        .map(|_| {
            let (x1, x2) = sample_covariates(&mut rng);
            INTERCEPT + TRUE_BETA[0] * x1 + TRUE_BETA[1] * x2 + dist.sample(&mut rng)
        })
        .collect();
    // Log scale, C' ~ U[0, c]: P(censored | T') = clamp(T'/c, 0, 1).
    // Original scale, C ~ U[0, c]: P(censored | T) = min(1, T/c) = min(1, e^{T' - log c}).
    let rate = |log_c: f64| -> f64 {
        let sum: f64 = if log_scale {
            let c = log_c.exp();
            logt.iter().map(|&lt| (lt / c).clamp(0.0, 1.0)).sum()
        } else {
            logt.iter().map(|&lt| (lt - log_c).exp().min(1.0)).sum()
        };
        sum / n_draws as f64
    };
    let (mut lo, mut hi) = (-20.0f64, 60.0f64);
    if rate(lo) < target || rate(hi) > target {
        return Err(Error::CensoringBracketing { target });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Semiparametric efficiency bound sigma* = sqrt(diag(I^{-1}(beta0)) / n),
/// via deterministic quadrature over the error support and the covariate
/// law, with the censoring survival folded into the at-risk weights.
pub fn efficiency_bound(
    error: ErrorKind,
    n: usize,
    censor_c: Option<f64>,
    censor_log_scale: bool,
) -> Result<[f64; 2]> {
    let dist = ErrorDistribution::new(error);
    let (lo, hi) = dist.support_window();

    // Covariate grid: X1 in {0, 1} with weight 1/2; X2 by Gauss-Legendre on
    // the truncated support weighted by the truncated-normal density.
    let rule_x = gauss_legendre(64)?;
    let z_norm = normal_cdf(X2_TRUNC, 0.0, X2_SD) - normal_cdf(-X2_TRUNC, 0.0, X2_SD);
    let mut xs: Vec<(DVector<f64>, f64)> = Vec::with_capacity(128);
    for (node, w) in rule_x.nodes().iter().zip(rule_x.weights()) {
        let x2 = X2_TRUNC * node;
        let wx2 = w * X2_TRUNC * normal_pdf(x2, 0.0, X2_SD) / z_norm;
        for x1 in [0.0, 1.0] {
            xs.push((DVector::from_vec(vec![x1, x2]), 0.5 * wx2));
        }
    }

    // Censoring survival evaluated on the log scale. Log-scale uniform
    // C' ~ U[0, c]: S(v) = 1 - clamp(v/c, 0, 1). Original-scale uniform
    // C ~ U[0, c]: S(v) = P(log C > v) = max(0, 1 - e^v / c).
    let s_c = |v: f64| -> f64 {
        match censor_c {
            Some(c) if censor_log_scale => 1.0 - (v / c).clamp(0.0, 1.0),
            Some(c) => (1.0 - v.exp() / c).max(0.0),
            None => 1.0,
        }
    };

    // I(beta0) = int g'(u)^2 f(u) E_X[(x - Xbar)^{x2} S_C(u + 2 + x'beta0)] du.
    let rule_t = gauss_legendre(10)?;
    let n_seg = 400usize;
    let mut info = DMatrix::<f64>::zeros(2, 2);
    for seg in 0..n_seg {
        let slo = lo + (hi - lo) * seg as f64 / n_seg as f64;
        let shi = lo + (hi - lo) * (seg + 1) as f64 / n_seg as f64;
        let mid = 0.5 * (slo + shi);
        let half = 0.5 * (shi - slo);
        for (node, w) in rule_t.nodes().iter().zip(rule_t.weights()) {
            let u = mid + half * node;
            let f_u = dist.pdf(u);
            if f_u <= 0.0 {
                continue;
            }
            let gdot = dist.log_hazard_deriv(u);
            let mut denom = 0.0;
            let mut m1 = DVector::<f64>::zeros(2);
            let mut m2 = DMatrix::<f64>::zeros(2, 2);
            for (x, wx) in &xs {
                let xb = TRUE_BETA[0] * x[0] + TRUE_BETA[1] * x[1];
                let sc = s_c(u + INTERCEPT + xb);
                if sc <= 0.0 {
                    continue;
                }
                let wgt = wx * sc;
                denom += wgt;
                m1.axpy(wgt, x, 1.0);
                for i in 0..2 {
                    for j in 0..2 {
                        m2[(i, j)] += wgt * x[i] * x[j];
                    }
                }
            }
            if denom <= 1e-14 {
                continue;
            }
            // E[(x - Xbar)^{x2} w] = M2 - M1 M1' / denom.
            let scale = w * half * gdot * gdot * f_u;
            for i in 0..2 {
                for j in 0..2 {
                    info[(i, j)] += scale * (m2[(i, j)] - m1[i] * m1[j] / denom);
                }
            }
        }
    }
    let inv = info
        .try_inverse()
        .ok_or(Error::InvalidConfig("singular efficiency information".into()))?;
    let nf = n as f64;
    Ok([(inv[(0, 0)] / nf).sqrt(), (inv[(1, 1)] / nf).sqrt()])
}

/// Per-parameter summary row, matching the study table columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub est: f64,
    pub bias: f64,
    pub se: f64,
    pub see1: f64,
    pub cp1: f64,
    pub see2: f64,
    pub cp2: f64,
    pub sigma_star: f64,
}

/// Aggregated result of a Monte Carlo study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub dist: String,
    pub dist_label: String,
    pub n: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub censor_c: f64,
    pub realized_censoring: f64,
    pub n_failed_fits: usize,
    pub params: Vec<ParamSummary>,
}

struct RepRecord {
    beta: [f64; 2],
    see1: [f64; 2],
    see2: [f64; 2],
    censored_frac: f64,
}

/// Run the full replication study for one design, deterministically in the
/// seed: replication r uses an independent RNG stream derived from
/// (seed, r), and aggregation runs in replication order.
pub fn run_study(design: &SimDesign) -> Result<SimulationSummary> {
    design.validate()?;
    let censor_c = calibrate_censoring(
        design.error,
        design.censor_rate_target,
        design.censor_log_scale,
        design.seed,
    )?;
    let config = FitConfig {
        n_interior_knots: knot_policy(design.n),
        ..FitConfig::default()
    };

    let outcomes: Vec<Option<RepRecord>> = (0..design.n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
            rng.set_stream(rep as u64 + 1);
            let data = gen_dataset(design, Some(censor_c), &mut rng).ok()?;
            let res = fit(&data, &config, None).ok()?;
            if !res.converged {
                return None;
            }
            let rule = gauss_legendre(config.quad_points).ok()?;
            let report = variance_report(&data, &res, &rule).ok()?;
            if report.see1.iter().chain(&report.see2).any(|v| !v.is_finite()) {
                return None;
            }
            let censored = data
                .observations()
                .iter()
                .filter(|o| !o.delta)
                .count() as f64
                / data.n() as f64;
            Some(RepRecord {
                beta: [res.model.beta[0], res.model.beta[1]],
                see1: [report.see1[0], report.see1[1]],
                see2: [report.see2[0], report.see2[1]],
                censored_frac: censored,
            })
        })
        .collect();

    let n_failed = outcomes.iter().filter(|o| o.is_none()).count();
    if n_failed * 10 > design.n_reps {
        return Err(Error::TooManyFailures {
            failed: n_failed,
            total: design.n_reps,
        });
    }
    let records: Vec<&RepRecord> = outcomes.iter().flatten().collect();
    let m = records.len() as f64;
    let sigma_star = efficiency_bound(
        design.error,
        design.n,
        Some(censor_c),
        design.censor_log_scale,
    )?;

    let z95 = 1.96;
    let mut params = Vec::with_capacity(2);
    for k in 0..2 {
        let mean_est = records.iter().map(|r| r.beta[k]).sum::<f64>() / m;
        let var = records
            .iter()
            .map(|r| (r.beta[k] - mean_est).powi(2))
            .sum::<f64>()
            / (m - 1.0);
        let see1 = records.iter().map(|r| r.see1[k]).sum::<f64>() / m;
        let see2 = records.iter().map(|r| r.see2[k]).sum::<f64>() / m;
        let cp1 = records
            .iter()
            .filter(|r| (r.beta[k] - TRUE_BETA[k]).abs() <= z95 * r.see1[k])
            .count() as f64
            / m;
        let cp2 = records
            .iter()
            .filter(|r| (r.beta[k] - TRUE_BETA[k]).abs() <= z95 * r.see2[k])
            .count() as f64
            / m;
        params.push(ParamSummary {
            name: format!("beta{}", k + 1),
            est: mean_est,
            bias: mean_est - TRUE_BETA[k],
            se: var.sqrt(),
            see1,
            cp1,
            see2,
            cp2,
            sigma_star: sigma_star[k],
        });
    }
    let realized_censoring = records.iter().map(|r| r.censored_frac).sum::<f64>() / m;

    Ok(SimulationSummary {
        dist: design.error.key().to_string(),
        dist_label: design.error.label().to_string(),
        n: design.n,
        n_reps: design.n_reps,
        seed: design.seed,
        censor_c,
        realized_censoring,
        n_failed_fits: n_failed,
        params,
    })
}

impl SimulationSummary {
    /// Table-shaped CSV with columns est, bias, SE, SEE1, CP1, SEE2, CP2,
    /// sigma_star.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "dist",
            "n",
            "param",
            "est",
            "bias",
            "se",
            "see1",
            "cp1",
            "see2",
            "cp2",
            "sigma_star",
        ])?;
        for p in &self.params {
            wtr.write_record([
                self.dist.clone(),
                self.n.to_string(),
                p.name.clone(),
                format!("{:.6}", p.est),
                format!("{:.6}", p.bias),
                format!("{:.6}", p.se),
                format!("{:.6}", p.see1),
                format!("{:.4}", p.cp1),
                format!("{:.6}", p.see2),
                format!("{:.4}", p.cp2),
                format!("{:.6}", p.sigma_star),
            ])?;
        }
        wtr.flush()
    }
}
