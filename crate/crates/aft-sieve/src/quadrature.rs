//! Gauss-Legendre quadrature and piecewise integration over knot spans.

use crate::error::{Error, Result};

/// Nodes and weights on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    /// Integrate `f` over `[lo, hi]` with the rule mapped onto that interval.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> Result<f64> {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = mid + half * x;
            let v = f(t);
            if !v.is_finite() {
                return Err(Error::IntegrationFailure { t });
            }
            acc += w * v;
        }
        Ok(acc * half)
    }
}

/// Gauss-Legendre rule with `n_points` in `1..=64`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n_points: usize) -> Result<QuadratureRule> {
    if n_points == 0 || n_points > 64 {
        return Err(Error::UnsupportedQuadPoints(n_points));
    }
    let n = n_points;
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-flavored initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Legendre polynomial `P_n(x)` and its derivative via the three-term
/// recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over `[lower, upper]`, splitting the interval at every
/// breakpoint that falls strictly inside it; each segment uses the given
/// Gauss-Legendre rule.
pub fn integrate_piecewise<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    rule: &QuadratureRule,
    lower: f64,
    upper: f64,
) -> Result<f64> {
    if lower > upper {
        return Err(Error::InvalidConfig(format!(
            "integration bounds out of order: {lower} > {upper}"
        )));
    }
    if lower == upper {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    let mut lo = lower;
    for &bp in breakpoints {
        if bp <= lo {
            continue;
        }
        if bp >= upper {
            break;
        }
        acc += rule.integrate(lo, bp, &mut f)?;
        lo = bp;
    }
    acc += rule.integrate(lo, upper, &mut f)?;
    Ok(acc)
}
