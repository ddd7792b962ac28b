//! Clamped B-spline sieve space: knot construction, basis evaluation and
//! derivatives, and spline functions with coefficient vectors.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Absolute slack for points that land just outside `[a, b]` due to rounding.
const DOMAIN_CLAMP_TOL: f64 = 1e-12;

/// How interior knots are positioned on `(a, b)`.
#[derive(Debug, Clone)]
pub enum KnotPlacement {
    /// `t_j = a + j (b - a) / (K + 1)`.
    EqualSpaced,
    /// Empirical quantiles of a residual sample (linear interpolation).
    ResidualQuantiles(Vec<f64>),
}

/// Strictly increasing interior knots on `(a, b)` with a clamped boundary
/// convention: each endpoint is repeated `order` times in the extended
/// sequence.
#[derive(Debug, Clone)]
pub struct KnotVector {
    a: f64,
    b: f64,
    order: usize,
    interior: Vec<f64>,
}

impl KnotVector {
    pub fn build(
        range: (f64, f64),
        n_interior: usize,
        order: usize,
        placement: &KnotPlacement,
    ) -> Result<Self> {
        let (a, b) = range;
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::DegenerateInterval { a, b });
        }
        if order < 1 {
            return Err(Error::InvalidConfig("spline order must be >= 1".into()));
        }
        let interior = match placement {
            KnotPlacement::EqualSpaced => (1..=n_interior)
                .map(|j| a + j as f64 * (b - a) / (n_interior as f64 + 1.0))
                .collect::<Vec<_>>(),
            KnotPlacement::ResidualQuantiles(residuals) => {
                if residuals.is_empty() {
                    return Err(Error::EmptyResiduals);
                }
                let mut sorted = residuals.clone();
                sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let mut knots = (1..=n_interior)
                    .map(|j| {
                        let p = j as f64 / (n_interior as f64 + 1.0);
                        quantile(&sorted, p)
                    })
                    .collect::<Vec<_>>();
                // Collapsed quantiles get nudged apart once before giving up.
                let eps = 1e-9 * (b - a);
                for k in 1..knots.len() {
                    if knots[k] <= knots[k - 1] {
                        knots[k] = knots[k - 1] + eps;
                    }
                }
                knots
            }
        };
        for (k, t) in interior.iter().enumerate() {
            if *t <= a || *t >= b {
                return Err(Error::InvalidConfig(format!(
                    "interior knot {t} falls outside ({a}, {b})"
                )));
            }
            if k > 0 && *t <= interior[k - 1] {
                return Err(Error::DuplicateKnots);
            }
        }
        Ok(Self {
            a,
            b,
            order,
            interior,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    /// Extended (clamped) knot sequence with each boundary repeated `order`
    /// times.
    pub fn extended(&self) -> Vec<f64> {
        let mut ext = Vec::with_capacity(2 * self.order + self.interior.len());
        ext.extend(std::iter::repeat(self.a).take(self.order));
        ext.extend_from_slice(&self.interior);
        ext.extend(std::iter::repeat(self.b).take(self.order));
        ext
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let pos = p * (m - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Values, first and second derivatives of every basis function at a point,
/// linearly extended outside `[a, b]`.
#[derive(Debug, Clone)]
pub struct ExtBasis {
    pub vals: DVector<f64>,
    pub d1: DVector<f64>,
    pub d2: DVector<f64>,
    pub extrapolated: bool,
}

/// B-spline basis over a clamped knot vector; `q = K + order` functions.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    knots: KnotVector,
    ext: Vec<f64>,
    q: usize,
}

impl SplineBasis {
    pub fn new(knots: KnotVector) -> Self {
        let ext = knots.extended();
        let q = knots.interior().len() + knots.order();
        Self { knots, ext, q }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn order(&self) -> usize {
        self.knots.order()
    }

    pub fn a(&self) -> f64 {
        self.knots.a()
    }

    pub fn b(&self) -> f64 {
        self.knots.b()
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    /// Span breakpoints `a, t_1, ..., t_K, b`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut bp = Vec::with_capacity(self.knots.interior().len() + 2);
        bp.push(self.a());
        bp.extend_from_slice(self.knots.interior());
        bp.push(self.b());
        bp
    }

    fn clamp_domain(&self, t: f64) -> Result<f64> {
        let (a, b) = (self.a(), self.b());
        if t < a {
            if a - t <= DOMAIN_CLAMP_TOL {
                return Ok(a);
            }
            return Err(Error::OutOfDomain { t, a, b });
        }
        if t > b {
            if t - b <= DOMAIN_CLAMP_TOL {
                return Ok(b);
            }
            return Err(Error::OutOfDomain { t, a, b });
        }
        Ok(t)
    }

    /// Basis of the given order (builds the Cox-de Boor table up to it).
    fn raw_basis(&self, t: f64, order: usize) -> Vec<f64> {
        let ext = &self.ext;
        let m = ext.len();
        let mut cur = vec![0.0f64; m - 1];
        if t >= ext[m - 1] {
            // Right endpoint belongs to the last nonempty span.
            if let Some(j) = (0..m - 1).rev().find(|&j| ext[j] < ext[j + 1]) {
                cur[j] = 1.0;
            }
        } else {
            for j in 0..m - 1 {
                if ext[j] <= t && t < ext[j + 1] {
                    cur[j] = 1.0;
                }
            }
        }
        for ord in 2..=order {
            let len = m - ord;
            let mut next = vec![0.0f64; len];
            for j in 0..len {
                let mut v = 0.0;
                let den_l = ext[j + ord - 1] - ext[j];
                if den_l > 0.0 {
                    v += (t - ext[j]) / den_l * cur[j];
                }
                let den_r = ext[j + ord] - ext[j + 1];
                if den_r > 0.0 {
                    v += (ext[j + ord] - t) / den_r * cur[j + 1];
                }
                next[j] = v;
            }
            cur = next;
        }
        cur.truncate(m - order);
        cur
    }

    /// One application of the knot-difference derivative operator, mapping
    /// (derivatives of) order-`ord` basis values to order-`ord + 1`.
    fn deriv_step(&self, vals: &[f64], ord: usize) -> Vec<f64> {
        let ext = &self.ext;
        let len = ext.len() - ord - 1;
        let mut out = vec![0.0f64; len];
        for j in 0..len {
            let mut v = 0.0;
            let den_l = ext[j + ord] - ext[j];
            if den_l > 0.0 {
                v += vals[j] / den_l;
            }
            let den_r = ext[j + ord + 1] - ext[j + 1];
            if den_r > 0.0 {
                v -= vals[j + 1] / den_r;
            }
            out[j] = ord as f64 * v;
        }
        out
    }

    /// All `q` basis values at `t`; errors if `t` is outside `[a, b]` beyond
    /// rounding slack.
    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let t = self.clamp_domain(t)?;
        Ok(DVector::from_vec(self.raw_basis(t, self.order())))
    }

    /// `k`-th derivative of every basis function, `1 <= k < order`.
    pub fn eval_deriv(&self, t: f64, k: usize) -> Result<DVector<f64>> {
        let p = self.order();
        if k == 0 {
            return self.eval(t);
        }
        if k >= p {
            return Err(Error::UnsupportedDerivative {
                requested: k,
                order: p,
            });
        }
        let t = self.clamp_domain(t)?;
        let mut vals = self.raw_basis(t, p - k);
        for ord in (p - k)..p {
            vals = self.deriv_step(&vals, ord);
        }
        Ok(DVector::from_vec(vals))
    }

    /// Values plus first/second derivatives, linearly extended beyond the
    /// boundary: outside `[a, b]` the basis continues with the boundary value
    /// and slope, so composed spline functions stay C^1.
    pub fn eval_ext(&self, t: f64) -> ExtBasis {
        let (a, b) = (self.a(), self.b());
        let (anchor, extrapolated) = if t < a - DOMAIN_CLAMP_TOL {
            (a, true)
        } else if t > b + DOMAIN_CLAMP_TOL {
            (b, true)
        } else {
            (t.clamp(a, b), false)
        };
        let vals = DVector::from_vec(self.raw_basis(anchor, self.order()));
        let d1 = if self.order() >= 2 {
            self.eval_deriv(anchor, 1).expect("anchor is in-domain")
        } else {
            DVector::zeros(self.q)
        };
        let d2 = if self.order() >= 3 {
            self.eval_deriv(anchor, 2).expect("anchor is in-domain")
        } else {
            DVector::zeros(self.q)
        };
        if extrapolated {
            let dt = t - anchor;
            ExtBasis {
                vals: &vals + &d1 * dt,
                d1,
                d2: DVector::zeros(self.q),
                extrapolated: true,
            }
        } else {
            ExtBasis {
                vals,
                d1,
                d2,
                extrapolated: false,
            }
        }
    }

    /// Greville abscissae of the clamped basis (knot averages).
    pub fn greville(&self) -> Vec<f64> {
        let p = self.order();
        if p == 1 {
            // Midpoints of the spans for piecewise constants.
            let bp = self.breakpoints();
            return bp.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        }
        (0..self.q)
            .map(|j| {
                let s: f64 = self.ext[j + 1..j + p].iter().sum();
                s / (p - 1) as f64
            })
            .collect()
    }
}

/// A spline `s(t) = sum_j gamma_j B_j(t)` in the sieve space.
#[derive(Debug, Clone)]
pub struct SplineFunction {
    basis: Arc<SplineBasis>,
    gamma: DVector<f64>,
}

impl SplineFunction {
    pub fn new(basis: Arc<SplineBasis>, gamma: DVector<f64>) -> Result<Self> {
        if gamma.len() != basis.q() {
            return Err(Error::DimensionMismatch {
                expected: basis.q(),
                actual: gamma.len(),
            });
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidConfig(
                "spline coefficients must be finite".into(),
            ));
        }
        Ok(Self { basis, gamma })
    }

    pub fn basis(&self) -> &Arc<SplineBasis> {
        &self.basis
    }

    pub fn gamma(&self) -> &DVector<f64> {
        &self.gamma
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.basis.eval(t)?.dot(&self.gamma))
    }

    pub fn eval_deriv(&self, t: f64, k: usize) -> Result<f64> {
        Ok(self.basis.eval_deriv(t, k)?.dot(&self.gamma))
    }

    /// `(s, s', s'')` at `t` with the linear extension outside `[a, b]`.
    pub fn eval_ext(&self, t: f64) -> (f64, f64, f64, bool) {
        let eb = self.basis.eval_ext(t);
        (
            eb.vals.dot(&self.gamma),
            eb.d1.dot(&self.gamma),
            eb.d2.dot(&self.gamma),
            eb.extrapolated,
        )
    }
}
