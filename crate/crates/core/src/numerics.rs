//! Uniform parameter grids, composite Simpson quadrature, second-order finite
//! differences and the Tricomi confluent hypergeometric function.

use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use statrs::function::gamma::gamma;

use crate::{Error, Result};

/// Uniform discretization of `[lower, upper]` with an odd number of nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterGrid {
    lower: f64,
    upper: f64,
    points: usize,
}

impl ParameterGrid {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid bounds must be finite, got [{lower}, {upper}]"
            )));
        }
        if upper <= lower {
            return Err(Error::InvalidArgument(format!(
                "grid upper bound {upper} must exceed lower bound {lower}"
            )));
        }
        if points < 3 || points.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "grid needs an odd number of points >= 3, got {points}"
            )));
        }
        Ok(Self { lower, upper, points })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.points - 1) as f64
    }

    pub fn point(&self, index: usize) -> f64 {
        if index + 1 == self.points {
            self.upper
        } else {
            self.lower + index as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |i| self.point(i))
    }

    /// Evaluates `f` at every node.
    pub fn sample<F: FnMut(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes().map(f).collect()
    }

    /// Same interval with the spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            points: 2 * (self.points - 1) + 1,
            ..*self
        }
    }

    /// Index of the node at `x`. Fails unless `x` lies on a node to within a
    /// millionth of the spacing.
    pub fn node_index(&self, x: f64) -> Result<usize> {
        let h = self.spacing();
        let pos = (x - self.lower) / h;
        let rounded = pos.round();
        if rounded < 0.0 || rounded > (self.points - 1) as f64 || (pos - rounded).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "location {x} is not a node of the grid [{}, {}] with {} points",
                self.lower, self.upper, self.points
            )));
        }
        Ok(rounded as usize)
    }
}

/// Quadrature weights for `n` equally spaced nodes with spacing `h`.
///
/// Odd `n` uses composite Simpson. Even `n >= 4` uses Simpson on the first
/// `n - 3` intervals and the 3/8 rule on the last three, so the rule stays
/// exact for cubics. Two nodes fall back to the trapezoid.
pub fn span_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 | 1 => {}
        2 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
            let mut i = 0;
            while i < simpson_end {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
                i += 2;
            }
            if n.is_multiple_of(2) {
                let s = n - 4;
                w[s] += 3.0 * h / 8.0;
                w[s + 1] += 9.0 * h / 8.0;
                w[s + 2] += 9.0 * h / 8.0;
                w[s + 3] += 3.0 * h / 8.0;
            }
        }
    }
    w
}

fn check_finite(samples: &[f64], context: &'static str) -> Result<()> {
    match samples.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index, context }),
        None => Ok(()),
    }
}

/// Composite Simpson integral of `samples` over the whole grid.
pub fn integrate(samples: &[f64], grid: &ParameterGrid) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: samples.len(),
        });
    }
    integrate_span(samples, grid, 0..grid.len())
}

/// Integral over the node range `span` (end-exclusive), used to split the
/// domain at prior edges.
pub fn integrate_span(samples: &[f64], grid: &ParameterGrid, span: Range<usize>) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: samples.len(),
        });
    }
    if span.end > grid.len() || span.start > span.end {
        return Err(Error::InvalidArgument(format!(
            "span {span:?} outside grid of {} points",
            grid.len()
        )));
    }
    let slice = &samples[span.clone()];
    check_finite(slice, "integrand").map_err(|e| match e {
        Error::NonFinite { index, context } => Error::NonFinite {
            index: index + span.start,
            context,
        },
        other => other,
    })?;
    let w = span_weights(slice.len(), grid.spacing());
    Ok(slice.iter().zip(&w).map(|(s, w)| s * w).sum())
}

/// Derivative of sampled data: central differences inside, one-sided
/// second-order stencils at both ends.
pub fn central_difference(samples: &[f64], grid: &ParameterGrid) -> Result<Vec<f64>> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: samples.len(),
        });
    }
    if samples.len() < 3 {
        return Err(Error::InvalidArgument(
            "central differences need at least 3 points".into(),
        ));
    }
    let n = samples.len();
    let h = grid.spacing();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (samples[i + 1] - samples[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * samples[n - 1] - 4.0 * samples[n - 2] + samples[n - 3]) / (2.0 * h);
    Ok(d)
}

/// Integral of `ln_integrand` (given in log form) over `(0, ∞)` with the
/// exp-sinh substitution `t = exp(π/2 · sinh τ)` and step halving.
fn exp_sinh_quadrature<F: Fn(f64) -> f64>(ln_integrand: F) -> Result<f64> {
    let term = |tau: f64| -> f64 {
        let u = FRAC_PI_2 * tau.sinh();
        if u.abs() > 700.0 {
            return 0.0;
        }
        let t = u.exp();
        let ln_jac = u + (FRAC_PI_2 * tau.cosh()).ln();
        let v = ln_integrand(t) + ln_jac;
        if v < -745.0 {
            0.0
        } else {
            v.exp()
        }
    };

    let sum_at = |h: f64| -> f64 {
        let mut total = term(0.0);
        for sign in [1.0, -1.0] {
            let mut k = 1usize;
            let mut quiet = 0;
            loop {
                let tau = sign * k as f64 * h;
                let v = term(tau);
                total += v;
                if total > 0.0 && v <= 1e-20 * total.abs() {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
                if quiet >= 4 || tau.abs() > 12.0 {
                    break;
                }
                k += 1;
            }
        }
        total * h
    };

    let mut h = 0.5;
    let mut prev = sum_at(h);
    for _ in 0..12 {
        h *= 0.5;
        let next = sum_at(h);
        if !next.is_finite() {
            break;
        }
        if (next - prev).abs() <= 1e-14 * next.abs().max(1e-300) {
            return Ok(next);
        }
        prev = next;
    }
    if prev.is_finite() {
        // converged to the step-halving floor
        Ok(prev)
    } else {
        Err(Error::Numeric("exp-sinh quadrature did not converge".into()))
    }
}

/// Tricomi confluent hypergeometric function `U(a, b, z)` for `z > 0`.
///
/// For `a > 0` the Laplace-type integral
/// `U = Γ(a)⁻¹ ∫₀^∞ e^{−zt} t^{a−1} (1+t)^{b−a−1} dt` is evaluated directly.
/// For `a ≤ 0` the Kummer transformation `U(a,b,z) = z^{1−b} U(a−b+1, 2−b, z)`
/// moves the call into that range when possible (this covers `U(−½, 0, z)`).
pub fn tricomi_u(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("tricomi_u needs z > 0, got {z}")));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "tricomi_u needs finite parameters, got a={a}, b={b}"
        )));
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    if a > 0.0 {
        let c = b - a - 1.0;
        let integral = exp_sinh_quadrature(|t| -z * t + (a - 1.0) * t.ln() + c * t.ln_1p())?;
        let value = integral / gamma(a);
        if !value.is_finite() {
            return Err(Error::Numeric(format!("tricomi_u({a}, {b}, {z}) overflowed")));
        }
        return Ok(value);
    }
    let a2 = a - b + 1.0;
    if a2 > 0.0 {
        return Ok(z.powf(1.0 - b) * tricomi_u(a2, 2.0 - b, z)?);
    }
    Err(Error::Numeric(format!(
        "no convergent integral representation for U({a}, {b}, z)"
    )))
}
