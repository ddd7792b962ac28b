//! Damped Newton-Raphson maximization of the sieve log-likelihood, jointly
//! in (beta, gamma), with step halving and a ridge fallback for
//! ill-conditioned Hessians.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::likelihood::{evaluate, log_likelihood, residual, Dataset, LikelihoodWorkspace, SieveModel};
use crate::quadrature::gauss_legendre;
use crate::spline::{KnotPlacement, KnotVector, SplineBasis, SplineFunction};

/// Knot placement policy for a fresh fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    EqualSpaced,
    /// Quantiles of the initial residuals.
    ResidualQuantiles,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Spline order p (4 = cubic); p >= 3 so the Hessian event terms exist.
    pub order: usize,
    pub n_interior_knots: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub step_halving_max: usize,
    pub ridge_eps: f64,
    pub quad_points: usize,
    /// Cap on |gamma_j| (log-hazard scale).
    pub gamma_bound: f64,
    pub placement: Placement,
    /// Domain margin as a fraction of the initial residual range.
    pub domain_margin: f64,
    /// Trust-region cap on the infinity norm of a single Newton step.
    /// Uncapped early steps can jump into the region where most residuals
    /// extrapolate past the domain, where the truncated integral no longer
    /// penalizes the event terms.
    pub step_cap: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            order: 4,
            n_interior_knots: 1,
            tol: 1e-5,
            max_iter: 200,
            step_halving_max: 30,
            ridge_eps: 1e-8,
            quad_points: 10,
            gamma_bound: 50.0,
            placement: Placement::EqualSpaced,
            domain_margin: 0.05,
            step_cap: 1.0,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        if self.order < 3 {
            return Err(Error::InvalidConfig(
                "spline order must be >= 3 for the sieve fit".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Converged (or diagnosed) fit of the sieve model.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: SieveModel,
    pub loglik: f64,
    pub n_iter: usize,
    pub converged: bool,
    /// Max-norm of the score at the final iterate.
    pub grad_norm: f64,
    pub hessian_at_opt: DMatrix<f64>,
    /// Fraction of residuals outside [a, b] at the final iterate.
    pub extrapolation_fraction: f64,
    /// Set when more than 1% of residuals needed the boundary extension.
    pub extrapolation_flagged: bool,
    /// Set when a Newton update hit the gamma cap.
    pub gamma_clipped: bool,
    /// Set when the uncensored OLS start was rank-deficient.
    pub beta_init_fallback: bool,
}

/// OLS of y on (1, x) over the uncensored observations; the intercept is
/// discarded (it is absorbed by the log hazard), only the slopes start the
/// iteration. The intercept column keeps the start equivariant under
/// shifts of y. Returns (beta, fallback_used) with a zero vector on a
/// rank-deficient design.
fn ols_uncensored(data: &Dataset) -> (DVector<f64>, bool) {
    let d = data.d();
    let p = d + 1;
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    let mut n_unc = 0usize;
    for (_, o) in data.iter_canonical() {
        if !o.delta {
            continue;
        }
        n_unc += 1;
        let row = |k: usize| if k == 0 { 1.0 } else { o.x[k - 1] };
        for k in 0..p {
            xty[k] += row(k) * o.y;
            for l in 0..p {
                xtx[(k, l)] += row(k) * row(l);
            }
        }
    }
    if n_unc < p + 1 {
        return (DVector::zeros(d), true);
    }
    match xtx.clone().cholesky() {
        Some(ch) => {
            let sol = ch.solve(&xty);
            if sol.iter().all(|v| v.is_finite()) {
                (sol.rows(1, d).into_owned(), false)
            } else {
                (DVector::zeros(d), true)
            }
        }
        None => (DVector::zeros(d), true),
    }
}

fn domain_from_residuals(residuals: &[f64], margin_frac: f64) -> (f64, f64) {
    let lo = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = residuals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let margin = if range > 0.0 {
        margin_frac * range
    } else {
        1.0
    };
    (lo - margin, hi + margin)
}

/// Starting values: OLS slope on the uncensored subsample and a constant
/// exponential log-hazard, `c = log(sum delta / sum(eps_i - a))`.
pub fn initial_estimate(data: &Dataset, config: &FitConfig) -> Result<(DVector<f64>, DVector<f64>)> {
    config.validate()?;
    let (beta0, _) = ols_uncensored(data);
    let residuals: Vec<f64> = data
        .iter_canonical()
        .map(|(_, o)| residual(o, &beta0))
        .collect();
    let (a, _) = domain_from_residuals(&residuals, config.domain_margin);
    let q = config.n_interior_knots + config.order;
    let c0 = constant_start(data, &residuals, a);
    Ok((beta0, DVector::from_element(q, c0)))
}

fn constant_start(data: &Dataset, residuals: &[f64], a: f64) -> f64 {
    let n_events = data.n_events() as f64;
    let exposure: f64 = residuals.iter().map(|e| (e - a).max(0.0)).sum();
    if exposure > 0.0 {
        (n_events / exposure).ln()
    } else {
        0.0
    }
}

/// Solve `(H - mu I) dir = -score` for one damping level; `None` when the
/// solve fails or does not yield an ascent direction.
fn damped_direction(hess: &DMatrix<f64>, score: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let p = score.len();
    let mut h = hess.clone();
    for i in 0..p {
        h[(i, i)] -= mu;
    }
    let dir = h.lu().solve(&(-score))?;
    (dir.iter().all(|v| v.is_finite()) && score.dot(&dir) > 0.0).then_some(dir)
}

/// Attempt a Newton solve of `H dir = -score`, escalating a ridge shift
/// until the direction is an ascent direction; falls back to the raw
/// gradient if the Hessian is hopeless.
fn newton_direction(hess: &DMatrix<f64>, score: &DVector<f64>, ridge_eps: f64) -> DVector<f64> {
    let mut mu = 0.0f64;
    loop {
        if let Some(dir) = damped_direction(hess, score, mu) {
            return dir;
        }
        mu = if mu == 0.0 { ridge_eps } else { mu * 10.0 };
        if mu > 1e10 {
            return score.clone();
        }
    }
}

/// Maximize the sieve log-likelihood by damped Newton iteration.
///
/// Termination follows `max(|delta theta|_inf, |score|_inf) <= tol`;
/// non-convergence is reported in the result, never silently dropped.
pub fn fit(data: &Dataset, config: &FitConfig, seed_basis: Option<SplineBasis>) -> Result<FitResult> {
    config.validate()?;
    let d = data.d();
    let (beta0, fallback) = ols_uncensored(data);
    let residuals: Vec<f64> = data
        .iter_canonical()
        .map(|(_, o)| residual(o, &beta0))
        .collect();
    let basis = Arc::new(match seed_basis {
        Some(b) => b,
        None => {
            let (a, b) = domain_from_residuals(&residuals, config.domain_margin);
            let placement = match config.placement {
                Placement::EqualSpaced => KnotPlacement::EqualSpaced,
                Placement::ResidualQuantiles => KnotPlacement::ResidualQuantiles(residuals.clone()),
            };
            SplineBasis::new(KnotVector::build(
                (a, b),
                config.n_interior_knots,
                config.order,
                &placement,
            )?)
        }
    });
    let q = basis.q();
    let c0 = constant_start(data, &residuals, basis.a());
    let mut theta = DVector::zeros(d + q);
    theta.rows_mut(0, d).copy_from(&beta0);
    theta.rows_mut(d, q).fill(c0);

    let rule = gauss_legendre(config.quad_points)?;
    let model = SieveModel::from_theta(basis.clone(), d, &theta)?;
    let mut ws = evaluate(data, &model, &rule)?;
    if !ws.value.is_finite() {
        return Err(Error::NonFiniteStart);
    }

    // Warm-up: Newton on gamma alone at the initial beta. This subproblem
    // is strictly concave (event terms linear in gamma, integral convex),
    // so it converges globally and leaves the joint iteration inside the
    // basin where all residuals sit in the basis domain.
    for _ in 0..config.max_iter {
        let sg = ws.score.rows(d, q).into_owned();
        if sg.amax() <= 0.1 * config.tol {
            break;
        }
        let hg = ws.hessian.view((d, d), (q, q)).into_owned();
        let dir = newton_direction(&hg, &sg, config.ridge_eps);
        let mut step = 1.0f64;
        let mut improved = false;
        for _ in 0..=config.step_halving_max {
            let mut cand = theta.clone();
            for j in 0..q {
                cand[d + j] = (cand[d + j] + step * dir[j])
                    .clamp(-config.gamma_bound, config.gamma_bound);
            }
            let cand_model = SieveModel::from_theta(basis.clone(), d, &cand)?;
            match log_likelihood(data, &cand_model, &rule) {
                Ok(l) if l.is_finite() && l > ws.value => {
                    theta = cand;
                    improved = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !improved {
            break;
        }
        let model = SieveModel::from_theta(basis.clone(), d, &theta)?;
        ws = evaluate(data, &model, &rule)?;
    }

    let mut converged = false;
    let mut gamma_clipped = false;
    let mut n_iter = 0usize;
    // The likelihood is unbounded along rays that push most residuals
    // outside the frozen domain (the truncated integral stops penalizing
    // the extrapolated event terms there), so candidates with more than
    // this fraction of residuals outside [a, b] are treated as infeasible.
    const EXTRAP_FEASIBLE: f64 = 0.10;
    let frac_outside = |beta: DVector<f64>| -> f64 {
        let (a, b) = (basis.a(), basis.b());
        let outside = data
            .iter_canonical()
            .filter(|(_, o)| {
                let e = residual(o, &beta);
                e < a || e > b
            })
            .count();
        outside as f64 / data.n() as f64
    };

    // Projected score norm for the box constraint |gamma_j| <= gamma_bound:
    // a component is stationary when its coefficient sits at the clamp and
    // the score pushes further outward (KKT condition), so it is excluded
    // from the convergence norm.
    let projected_grad = |theta: &DVector<f64>, score: &DVector<f64>| -> f64 {
        let mut norm = 0.0f64;
        for j in 0..d + q {
            let s = score[j];
            if j >= d {
                let at_lo = theta[j] <= -config.gamma_bound + 1e-9 && s < 0.0;
                let at_hi = theta[j] >= config.gamma_bound - 1e-9 && s > 0.0;
                if at_lo || at_hi {
                    continue;
                }
            }
            norm = norm.max(s.abs());
        }
        norm
    };

    // A coefficient whose basis support carries (almost) no events heads to
    // the lower box bound at one Newton unit per step: the likelihood there
    // behaves like -c exp(gamma_j). Jump such coefficients straight to the
    // clamp whenever that costs no likelihood, instead of crawling.
    const SNAP_BELOW: f64 = -15.0;
    let snap_to_bound = |theta: &mut DVector<f64>,
                             ws: &mut LikelihoodWorkspace,
                             gamma_clipped: &mut bool|
     -> Result<bool> {
        let mut cand = theta.clone();
        let mut any = false;
        for j in d..d + q {
            if theta[j] <= SNAP_BELOW && theta[j] > -config.gamma_bound + 1e-9 && ws.score[j] < 0.0
            {
                cand[j] = -config.gamma_bound;
                any = true;
            }
        }
        if !any {
            return Ok(false);
        }
        let cand_model = SieveModel::from_theta(basis.clone(), d, &cand)?;
        match log_likelihood(data, &cand_model, &rule) {
            Ok(l) if l.is_finite() && l >= ws.value => {
                *theta = cand;
                *ws = evaluate(data, &cand_model, &rule)?;
                *gamma_clipped = true;
                Ok(true)
            }
            _ => Ok(false),
        }
    };
    snap_to_bound(&mut theta, &mut ws, &mut gamma_clipped)?;

    // Levenberg-style adaptive damping: a rejected trial raises mu and
    // recomputes the direction (rotating it toward the gradient and
    // shrinking it), rather than halving the step along a direction that
    // an ill-conditioned Hessian may have pointed into a flat subspace.
    let mut mu = 0.0f64;
    for iter in 1..=config.max_iter {
        // Active-set reduction: coefficients pinned at the box bound with an
        // outward score stay fixed; solving the full system would spend the
        // whole step budget on a move the clamp immediately undoes.
        let free: Vec<usize> = (0..d + q)
            .filter(|&j| {
                if j < d {
                    return true;
                }
                let s = ws.score[j];
                let at_lo = theta[j] <= -config.gamma_bound + 1e-9 && s < 0.0;
                let at_hi = theta[j] >= config.gamma_bound - 1e-9 && s > 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        let hess_f = ws.hessian.select_rows(free.iter()).select_columns(free.iter());
        let score_f = DVector::from_iterator(free.len(), free.iter().map(|&j| ws.score[j]));
        let mut accepted: Option<(DVector<f64>, f64)> = None;
        for _ in 0..=(config.step_halving_max + 30) {
            let Some(dir_f) = damped_direction(&hess_f, &score_f, mu) else {
                mu = if mu == 0.0 { config.ridge_eps } else { mu * 10.0 };
                if mu > 1e12 {
                    break;
                }
                continue;
            };
            if dir_f.amax() > config.step_cap {
                // Over-long step: raise the damping and recompute rather
                // than rescale, which would let a flat Hessian direction
                // crush progress in the well-conditioned subspace.
                mu = if mu == 0.0 { config.ridge_eps } else { mu * 10.0 };
                if mu > 1e12 {
                    break;
                }
                continue;
            }
            let mut cand = theta.clone();
            for (k, &j) in free.iter().enumerate() {
                cand[j] += dir_f[k];
            }
            for j in d..d + q {
                if cand[j].abs() > config.gamma_bound {
                    cand[j] = cand[j].clamp(-config.gamma_bound, config.gamma_bound);
                    gamma_clipped = true;
                }
            }
            let feasible = frac_outside(cand.rows(0, d).into_owned()) <= EXTRAP_FEASIBLE;
            if feasible {
                let cand_model = SieveModel::from_theta(basis.clone(), d, &cand)?;
                if let Ok(l) = log_likelihood(data, &cand_model, &rule) {
                    if l.is_finite() && l > ws.value {
                        accepted = Some((cand, l));
                        break;
                    }
                }
            }
            mu = if mu == 0.0 { config.ridge_eps } else { mu * 10.0 };
            if mu > 1e12 {
                break;
            }
        }
        let Some((new_theta, _)) = accepted else {
            // No ascent possible; declare convergence only if the score
            // already meets the tolerance.
            break;
        };
        mu = if mu <= config.ridge_eps { 0.0 } else { mu * 0.1 };
        let delta_inf = (&new_theta - &theta).amax();
        theta = new_theta;
        let new_model = SieveModel::from_theta(basis.clone(), d, &theta)?;
        ws = evaluate(data, &new_model, &rule)?;
        n_iter = iter;
        // A snap is a large parameter move, so convergence is only declared
        // on iterations without one.
        let snapped = snap_to_bound(&mut theta, &mut ws, &mut gamma_clipped)?;
        if !snapped && delta_inf.max(projected_grad(&theta, &ws.score)) <= config.tol {
            converged = true;
            break;
        }
    }

    let grad_norm = projected_grad(&theta, &ws.score);
    let converged = converged || grad_norm <= config.tol;
    let extrapolation_fraction = ws.n_extrapolated as f64 / data.n() as f64;
    let model = SieveModel {
        beta: theta.rows(0, d).into_owned(),
        log_hazard: SplineFunction::new(basis, theta.rows(d, q).into_owned())?,
    };
    Ok(FitResult {
        model,
        loglik: ws.value,
        n_iter,
        converged,
        grad_norm,
        hessian_at_opt: ws.hessian,
        extrapolation_fraction,
        extrapolation_flagged: extrapolation_fraction > 0.01,
        gamma_clipped,
        beta_init_fallback: fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::Observation;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn obs(y: f64, delta: bool, x: &[f64]) -> Observation {
        Observation {
            y,
            delta,
            x: DVector::from_vec(x.to_vec()),
        }
    }

    fn extreme_value_sample(rng: &mut impl Rng) -> f64 {
        let u: f64 = loop {
            let u = rng.gen::<f64>();
            if u > 0.0 {
                break u;
            }
        };
        (-(u.ln())).ln()
    }

    fn linear_dataset(n: usize, seed: u64, censored: bool) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs = (0..n)
            .map(|_| {
                let x1 = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
                let x2: f64 = rng.gen_range(-1.0..1.0);
                let e = extreme_value_sample(&mut rng);
                let t = x1 + 0.5 * x2 + e;
                let (y, delta) = if censored {
                    let c: f64 = rng.gen_range(-1.0..3.0);
                    (t.min(c), t <= c)
                } else {
                    (t, true)
                };
                Observation {
                    y,
                    delta,
                    x: DVector::from_vec(vec![x1, x2]),
                }
            })
            .collect::<Vec<_>>();
        Dataset::new(obs).unwrap()
    }

    #[test]
    fn ols_start_recovers_exact_linear_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let beta_true = [1.5, -0.7];
        let obs = (0..12)
            .map(|_| {
                let x1: f64 = rng.gen_range(-1.0..1.0);
                let x2: f64 = rng.gen_range(-1.0..1.0);
                obs(beta_true[0] * x1 + beta_true[1] * x2, true, &[x1, x2])
            })
            .collect::<Vec<_>>();
        let data = Dataset::new(obs).unwrap();
        let (b, fallback) = ols_uncensored(&data);
        assert!(!fallback);
        assert_abs_diff_eq!(b[0], beta_true[0], epsilon = 1e-10);
        assert_abs_diff_eq!(b[1], beta_true[1], epsilon = 1e-10);
    }

    #[test]
    fn ols_matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let obs: Vec<Observation> = (0..12)
            .map(|_| {
                let x1: f64 = rng.gen_range(-1.0..1.0);
                let x2: f64 = rng.gen_range(-1.0..1.0);
                let y = 0.8 * x1 - 0.3 * x2 + rng.gen_range(-0.2..0.2);
                obs(y, true, &[x1, x2])
            })
            .collect();
        let data = Dataset::new(obs.clone()).unwrap();
        let (b, _) = ols_uncensored(&data);
        // Intercept model: slopes solve the 2x2 normal equations on
        // mean-centered variables, inverted explicitly.
        let n = obs.len() as f64;
        let mx1 = obs.iter().map(|o| o.x[0]).sum::<f64>() / n;
        let mx2 = obs.iter().map(|o| o.x[1]).sum::<f64>() / n;
        let my = obs.iter().map(|o| o.y).sum::<f64>() / n;
        let (mut sxx, mut sxy, mut syy2, mut sx1y, mut sx2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for o in &obs {
            let (c1, c2, cy) = (o.x[0] - mx1, o.x[1] - mx2, o.y - my);
            sxx += c1 * c1;
            sxy += c1 * c2;
            syy2 += c2 * c2;
            sx1y += c1 * cy;
            sx2y += c2 * cy;
        }
        let det = sxx * syy2 - sxy * sxy;
        let b1 = (syy2 * sx1y - sxy * sx2y) / det;
        let b2 = (sxx * sx2y - sxy * sx1y) / det;
        assert_abs_diff_eq!(b[0], b1, epsilon = 1e-10);
        assert_abs_diff_eq!(b[1], b2, epsilon = 1e-10);
    }

    #[test]
    fn exponential_start_single_observation() {
        let data = Dataset::new(vec![obs(2.0, true, &[0.0])]).unwrap();
        let c = constant_start(&data, &[2.0], 0.0);
        assert_abs_diff_eq!(c, (0.5f64).ln(), epsilon = 1e-14);
    }

    #[test]
    fn rank_deficient_start_falls_back_to_zero() {
        // A single covariate that never varies among the uncensored rows.
        let data = Dataset::new(vec![
            obs(1.0, true, &[0.0]),
            obs(2.0, true, &[0.0]),
            obs(1.5, false, &[1.0]),
        ])
        .unwrap();
        let (b, fallback) = ols_uncensored(&data);
        assert!(fallback);
        assert_eq!(b[0], 0.0);
    }

    #[test]
    fn fit_recovers_truth_and_satisfies_optimality() {
        let data = linear_dataset(300, 33, true);
        let config = FitConfig::default();
        let res = fit(&data, &config, None).unwrap();
        assert!(res.converged, "grad_norm {}", res.grad_norm);
        assert!(res.grad_norm <= config.tol);
        assert!((res.model.beta[0] - 1.0).abs() < 0.4);
        assert!((res.model.beta[1] - 0.5).abs() < 0.4);
        // gamma-gamma block negative semidefinite at the optimum.
        let d = data.d();
        let q = res.model.q();
        let gg = res.hessian_at_opt.view((d, d), (q, q)).into_owned();
        let eig = gg.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e <= 1e-10));
    }

    #[test]
    fn monotone_ascent_and_fitted_score_near_zero() {
        let data = linear_dataset(120, 7, true);
        let config = FitConfig::default();
        let res = fit(&data, &config, None).unwrap();
        assert!(res.converged);
        // The score equations hold at the optimum; the gamma score against
        // the constant direction gives sum(delta - int e^g) = 0.
        let rule = gauss_legendre(config.quad_points).unwrap();
        let ws = evaluate(&data, &res.model, &rule).unwrap();
        assert!(ws.score.amax() <= 1e-5);
        let d = data.d();
        let q = res.model.q();
        let constant_dir: f64 = (0..q).map(|j| ws.score[d + j]).sum();
        assert!(constant_dir.abs() <= 1e-5 * q as f64);
    }

    #[test]
    fn noiseless_extreme_value_hazard_recovered() {
        // g0(t) = t is exactly representable; a large uncensored sample
        // pins the fitted log-hazard close to the identity on the
        // central part of the domain.
        let data = linear_dataset(600, 99, false);
        let config = FitConfig {
            n_interior_knots: 2,
            ..FitConfig::default()
        };
        let res = fit(&data, &config, None).unwrap();
        assert!(res.converged);
        // Compare over the central 90% of the fitted residuals; outside it
        // the spline coefficients are pinned by a handful of extreme order
        // statistics and carry O(1) sampling noise.
        let mut resid: Vec<f64> = data
            .observations()
            .iter()
            .map(|o| o.y - o.x.dot(&res.model.beta))
            .collect();
        resid.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let lo = resid[resid.len() / 20];
        let hi = resid[resid.len() - 1 - resid.len() / 20];
        let mut sup = 0.0f64;
        for i in 0..=200 {
            let t = lo + (hi - lo) * i as f64 / 200.0;
            let diff = (res.model.log_hazard.eval(t).unwrap() - t).abs();
            sup = sup.max(diff);
        }
        assert!(sup <= 0.3, "sup-norm deviation {sup}");
    }

    #[test]
    fn translation_equivariance() {
        let data = linear_dataset(150, 11, true);
        let config = FitConfig::default();
        let res = fit(&data, &config, None).unwrap();
        let shift = 3.0;
        let shifted: Vec<Observation> = data
            .observations()
            .iter()
            .map(|o| Observation {
                y: o.y + shift,
                delta: o.delta,
                x: o.x.clone(),
            })
            .collect();
        let data_s = Dataset::new(shifted).unwrap();
        let res_s = fit(&data_s, &config, None).unwrap();
        for k in 0..2 {
            assert!(
                (res.model.beta[k] - res_s.model.beta[k]).abs() <= 1e-6,
                "beta {k} moved"
            );
        }
        // g_shift(t) ~= g(t - shift) at interior points.
        let basis = res.model.log_hazard.basis();
        let (a, b) = (basis.a(), basis.b());
        for i in 1..10 {
            let t = a + (b - a) * i as f64 / 10.0;
            let g = res.model.log_hazard.eval(t).unwrap();
            let gs = res_s.model.log_hazard.eval(t + shift).unwrap();
            assert!((g - gs).abs() <= 1e-4, "t={t}: {g} vs {gs}");
        }
    }

    #[test]
    fn permutation_invariance_bit_identical() {
        let data = linear_dataset(80, 5, true);
        let config = FitConfig::default();
        let res = fit(&data, &config, None).unwrap();
        let mut shuffled = data.observations().to_vec();
        shuffled.reverse();
        shuffled.swap(3, 40);
        let data_p = Dataset::new(shuffled).unwrap();
        let res_p = fit(&data_p, &config, None).unwrap();
        assert_eq!(res.model.beta, res_p.model.beta);
        assert_eq!(res.model.log_hazard.gamma(), res_p.model.log_hazard.gamma());
        assert_eq!(res.loglik.to_bits(), res_p.loglik.to_bits());
    }

    #[test]
    fn divergence_is_reported_not_silent() {
        let data = linear_dataset(50, 3, true);
        let config = FitConfig {
            max_iter: 1,
            tol: 1e-12,
            ..FitConfig::default()
        };
        let res = fit(&data, &config, None).unwrap();
        assert!(!res.converged);
    }
}
