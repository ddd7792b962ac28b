//! Sieve log-likelihood for the right-censored linear transformation model,
//! with analytic score and Hessian in theta = (beta, gamma).
//!
//! Per observation, after the change of variables s = t - x'beta,
//!
//!   l_i = delta_i * g(eps_i) - int_a^{min(eps_i, b)} exp{g(s)} ds,
//!
//! where eps_i = y_i - x_i'beta and g is the spline log-hazard. The event
//! term uses the linear boundary extension of g when a residual leaves
//! [a, b]; the integral is truncated at b and vanishes below a.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::spline::{SplineBasis, SplineFunction};

/// One right-censored observation `(y, delta, x)` on the transformed time
/// scale.
#[derive(Debug, Clone)]
pub struct Observation {
    pub y: f64,
    pub delta: bool,
    pub x: DVector<f64>,
}

/// A validated sample of observations sharing covariate dimension `d`.
///
/// A canonical evaluation order (sorted by `(y, delta, x)`) is fixed at
/// construction so that all per-observation reductions are invariant to the
/// order in which rows were supplied.
#[derive(Debug, Clone)]
pub struct Dataset {
    obs: Vec<Observation>,
    d: usize,
    canonical: Vec<usize>,
}

impl Dataset {
    pub fn new(obs: Vec<Observation>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::InvalidDataset("no observations".into()));
        }
        let d = obs[0].x.len();
        if d == 0 {
            return Err(Error::InvalidDataset("zero covariates".into()));
        }
        for (i, o) in obs.iter().enumerate() {
            if o.x.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "observation {i} has {} covariates, expected {d}",
                    o.x.len()
                )));
            }
            if !o.y.is_finite() || o.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "observation {i} contains a non-finite value"
                )));
            }
        }
        if !obs.iter().any(|o| o.delta) {
            return Err(Error::InvalidDataset("no events observed".into()));
        }
        let mut canonical: Vec<usize> = (0..obs.len()).collect();
        canonical.sort_by(|&i, &j| {
            let (a, b) = (&obs[i], &obs[j]);
            a.y.partial_cmp(&b.y)
                .unwrap()
                .then(a.delta.cmp(&b.delta))
                .then_with(|| {
                    for k in 0..d {
                        match a.x[k].partial_cmp(&b.x[k]).unwrap() {
                            std::cmp::Ordering::Equal => continue,
                            ord => return ord,
                        }
                    }
                    std::cmp::Ordering::Equal
                })
        });
        Ok(Self { obs, d, canonical })
    }

    pub fn n(&self) -> usize {
        self.obs.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn observations(&self) -> &[Observation] {
        &self.obs
    }

    pub fn n_events(&self) -> usize {
        self.obs.iter().filter(|o| o.delta).count()
    }

    /// Observations in the canonical (order-invariant) evaluation sequence.
    pub fn iter_canonical(&self) -> impl Iterator<Item = (usize, &Observation)> {
        self.canonical.iter().map(move |&i| (i, &self.obs[i]))
    }
}

/// Residual `eps_i(beta) = y_i - x_i' beta`.
pub fn residual(obs: &Observation, beta: &DVector<f64>) -> f64 {
    obs.y - obs.x.dot(beta)
}

/// Parameter pair theta = (beta, gamma) with the spline basis the gamma
/// coefficients refer to.
#[derive(Debug, Clone)]
pub struct SieveModel {
    pub beta: DVector<f64>,
    pub log_hazard: SplineFunction,
}

impl SieveModel {
    pub fn d(&self) -> usize {
        self.beta.len()
    }

    pub fn q(&self) -> usize {
        self.log_hazard.gamma().len()
    }

    pub fn n_params(&self) -> usize {
        self.d() + self.q()
    }

    /// Stacked parameter vector `[beta; gamma]`.
    pub fn theta(&self) -> DVector<f64> {
        let mut th = DVector::zeros(self.n_params());
        th.rows_mut(0, self.d()).copy_from(&self.beta);
        th.rows_mut(self.d(), self.q())
            .copy_from(self.log_hazard.gamma());
        th
    }

    pub fn from_theta(basis: Arc<SplineBasis>, d: usize, theta: &DVector<f64>) -> Result<Self> {
        let q = basis.q();
        if theta.len() != d + q {
            return Err(Error::DimensionMismatch {
                expected: d + q,
                actual: theta.len(),
            });
        }
        let beta = theta.rows(0, d).into_owned();
        let gamma = theta.rows(d, q).into_owned();
        Ok(Self {
            beta,
            log_hazard: SplineFunction::new(basis, gamma)?,
        })
    }
}

/// Log-likelihood value with its analytic gradient and Hessian.
#[derive(Debug, Clone)]
pub struct LikelihoodWorkspace {
    pub value: f64,
    pub score: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// Observations whose residual fell outside `[a, b]`.
    pub n_extrapolated: usize,
}

/// Per-node cache for the shared quadrature decomposition: basis values and
/// exp-hazard at the mapped Gauss nodes of every full knot span, plus prefix
/// integrals up to each breakpoint.
struct SpanCache {
    breakpoints: Vec<f64>,
    /// Cumulative `int_a^{tau_k} e^g`, one entry per breakpoint.
    cum0: Vec<f64>,
    cum_v: Vec<DVector<f64>>,
    cum_m: Vec<DMatrix<f64>>,
    value_only: bool,
}

fn build_span_cache(
    basis: &SplineBasis,
    gamma: &DVector<f64>,
    rule: &QuadratureRule,
    value_only: bool,
) -> Result<SpanCache> {
    let q = basis.q();
    let breakpoints = basis.breakpoints();
    let n_bp = breakpoints.len();
    let mut cum0 = vec![0.0; n_bp];
    let mut cum_v = Vec::new();
    let mut cum_m = Vec::new();
    if !value_only {
        cum_v = vec![DVector::zeros(q); n_bp];
        cum_m = vec![DMatrix::zeros(q, q); n_bp];
    }
    for k in 0..n_bp - 1 {
        let (lo, hi) = (breakpoints[k], breakpoints[k + 1]);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut s0 = 0.0;
        let mut sv = DVector::zeros(if value_only { 0 } else { q });
        let mut sm = DMatrix::zeros(if value_only { 0 } else { q }, if value_only { 0 } else { q });
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let s = mid + half * x;
            let bvec = basis.eval(s)?;
            let g = bvec.dot(gamma);
            let eg = g.exp() * w * half;
            if !eg.is_finite() {
                return Err(Error::IntegrationFailure { t: s });
            }
            s0 += eg;
            if !value_only {
                sv.axpy(eg, &bvec, 1.0);
                rank1_update(&mut sm, eg, &bvec);
            }
        }
        cum0[k + 1] = cum0[k] + s0;
        if !value_only {
            cum_v[k + 1] = &cum_v[k] + sv;
            cum_m[k + 1] = &cum_m[k] + sm;
        }
    }
    Ok(SpanCache {
        breakpoints,
        cum0,
        cum_v,
        cum_m,
        value_only,
    })
}

fn rank1_update(m: &mut DMatrix<f64>, alpha: f64, v: &DVector<f64>) {
    let q = v.len();
    for j in 0..q {
        let aj = alpha * v[j];
        if aj == 0.0 {
            continue;
        }
        for i in 0..q {
            m[(i, j)] += aj * v[i];
        }
    }
}

impl SpanCache {
    /// Integrals of `e^g`, `e^g B`, `e^g B B'` from `a` to `u` (with
    /// `u <= b`), reusing the prefix sums for full spans.
    fn integrals_to(
        &self,
        basis: &SplineBasis,
        gamma: &DVector<f64>,
        rule: &QuadratureRule,
        u: f64,
    ) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let q = basis.q();
        let dim = if self.value_only { 0 } else { q };
        if u <= self.breakpoints[0] {
            return Ok((0.0, DVector::zeros(dim), DMatrix::zeros(dim, dim)));
        }
        // Largest breakpoint index with breakpoints[k] <= u.
        let k = match self
            .breakpoints
            .binary_search_by(|bp| bp.partial_cmp(&u).unwrap())
        {
            Ok(idx) => idx,
            Err(idx) => idx - 1,
        };
        let mut i0 = self.cum0[k];
        let mut iv = if self.value_only {
            DVector::zeros(0)
        } else {
            self.cum_v[k].clone()
        };
        let mut im = if self.value_only {
            DMatrix::zeros(0, 0)
        } else {
            self.cum_m[k].clone()
        };
        let lo = self.breakpoints[k];
        if u > lo {
            let mid = 0.5 * (lo + u);
            let half = 0.5 * (u - lo);
            for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                let s = mid + half * x;
                let bvec = basis.eval(s)?;
                let g = bvec.dot(gamma);
                let eg = g.exp() * w * half;
                if !eg.is_finite() {
                    return Err(Error::IntegrationFailure { t: s });
                }
                i0 += eg;
                if !self.value_only {
                    iv.axpy(eg, &bvec, 1.0);
                    rank1_update(&mut im, eg, &bvec);
                }
            }
        }
        Ok((i0, iv, im))
    }
}

fn check_dims(data: &Dataset, model: &SieveModel) -> Result<()> {
    if model.d() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            actual: model.d(),
        });
    }
    Ok(())
}

fn extended_bounds(basis: &SplineBasis) -> (f64, f64) {
    let (a, b) = (basis.a(), basis.b());
    let r = b - a;
    (a - r, b + r)
}

/// `l_n(beta, gamma)`: the averaged sieve log-likelihood.
pub fn log_likelihood(data: &Dataset, model: &SieveModel, rule: &QuadratureRule) -> Result<f64> {
    check_dims(data, model)?;
    let basis = model.log_hazard.basis().as_ref();
    let gamma = model.log_hazard.gamma();
    let cache = build_span_cache(basis, gamma, rule, true)?;
    let (lo_ext, hi_ext) = extended_bounds(basis);
    let b = basis.b();
    let mut value = 0.0;
    for (index, obs) in data.iter_canonical() {
        let eps = residual(obs, &model.beta);
        if eps < lo_ext || eps > hi_ext {
            return Err(Error::DomainViolation {
                index,
                residual: eps,
                lo: lo_ext,
                hi: hi_ext,
            });
        }
        let u = eps.min(b);
        let (i0, _, _) = cache.integrals_to(basis, gamma, rule, u)?;
        value -= i0;
        if obs.delta {
            let (g, _, _, _) = model.log_hazard.eval_ext(eps);
            value += g;
        }
    }
    Ok(value / data.n() as f64)
}

/// Value, score, and Hessian in one pass over a shared quadrature
/// decomposition (identical nodes for all three).
pub fn evaluate(
    data: &Dataset,
    model: &SieveModel,
    rule: &QuadratureRule,
) -> Result<LikelihoodWorkspace> {
    check_dims(data, model)?;
    let basis = model.log_hazard.basis().as_ref();
    let gamma = model.log_hazard.gamma();
    let (d, q) = (data.d(), basis.q());
    let p = d + q;
    let cache = build_span_cache(basis, gamma, rule, false)?;
    let (lo_ext, hi_ext) = extended_bounds(basis);
    let (a, b) = (basis.a(), basis.b());

    let mut value = 0.0;
    let mut score = DVector::zeros(p);
    let mut hess = DMatrix::zeros(p, p);
    let mut n_extrapolated = 0usize;

    for (index, obs) in data.iter_canonical() {
        let eps = residual(obs, &model.beta);
        if eps < lo_ext || eps > hi_ext {
            return Err(Error::DomainViolation {
                index,
                residual: eps,
                lo: lo_ext,
                hi: hi_ext,
            });
        }
        let u = eps.min(b);
        let (i0, iv, im) = cache.integrals_to(basis, gamma, rule, u)?;
        value -= i0;
        // gamma score: -integral part.
        for j in 0..q {
            score[d + j] -= iv[j];
        }
        // gamma-gamma Hessian: negated Gram matrix.
        for j in 0..q {
            for k in 0..q {
                hess[(d + j, d + k)] -= im[(j, k)];
            }
        }
        let in_open = eps > a && eps < b;
        let eb = basis.eval_ext(eps);
        if eb.extrapolated {
            n_extrapolated += 1;
        }
        let g = eb.vals.dot(gamma);
        let dg = eb.d1.dot(gamma);
        let ddg = eb.d2.dot(gamma);
        let eg_at_eps = if in_open { g.exp() } else { 0.0 };
        let delta = if obs.delta { 1.0 } else { 0.0 };
        if obs.delta {
            value += g;
            for j in 0..q {
                score[d + j] += eb.vals[j];
            }
        }
        // beta score: x_k (-delta g'(eps) + e^{g(eps)} 1{a < eps < b}).
        let beta_factor = -delta * dg + eg_at_eps;
        if beta_factor != 0.0 {
            for k in 0..d {
                score[k] += obs.x[k] * beta_factor;
            }
        }
        // beta-beta block: x x' (delta g''(eps) - e^{g} g'(eps) 1{...}).
        let bb_factor = delta * ddg - eg_at_eps * dg;
        if bb_factor != 0.0 {
            for k in 0..d {
                for l in 0..d {
                    hess[(k, l)] += obs.x[k] * obs.x[l] * bb_factor;
                }
            }
        }
        // beta-gamma block: x (-delta B'(eps) + e^{g} B(eps) 1{...})'.
        for j in 0..q {
            let gj = -delta * eb.d1[j] + eg_at_eps * eb.vals[j];
            if gj == 0.0 {
                continue;
            }
            for k in 0..d {
                let v = obs.x[k] * gj;
                hess[(k, d + j)] += v;
                hess[(d + j, k)] += v;
            }
        }
    }

    let inv_n = 1.0 / data.n() as f64;
    value *= inv_n;
    score *= inv_n;
    hess *= inv_n;
    if !value.is_finite() {
        return Err(Error::IntegrationFailure { t: f64::NAN });
    }
    Ok(LikelihoodWorkspace {
        value,
        score,
        hessian: hess,
        n_extrapolated,
    })
}
