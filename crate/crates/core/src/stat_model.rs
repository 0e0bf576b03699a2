//! Estimation problems on a parameter grid: the prior `p(φ)`, the outcome
//! model `p(x|φ)` with its derivatives, Fisher information and entropies.

use std::f64::consts::PI;
use std::ops::Range;

use crate::numerics::{central_difference, integrate_span, ParameterGrid};
use crate::{Error, Result};

/// Tolerance on `∫ p(φ) dφ = 1`.
pub const PRIOR_NORMALIZATION_TOL: f64 = 1e-6;
/// Tolerance on `Σₓ p(x|φ) = 1` at each node.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Tolerance on `Σₓ ∂p(x|φ)/∂φ = 0` at each node.
pub const DERIVATIVE_SUM_TOL: f64 = 1e-6;

/// Analytic family a prior was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorKind {
    /// Uniform density `1/width` on `[center − width/2, center + width/2]`.
    Rectangle {
        center: f64,
        width: f64,
    },
    /// Normal density, renormalized to the grid.
    Gaussian {
        mean: f64,
        sigma: f64,
    },
    /// `(1 + cos(2π(φ−center)/width))/width` on an interval of length `width`.
    RaisedCosine {
        center: f64,
        width: f64,
    },
    /// Flat top of length `width` with raised-cosine ramps of length `ramp`
    /// on each side. A smooth stand-in for a rectangle.
    Plateau {
        center: f64,
        width: f64,
        ramp: f64,
    },
    Tabulated,
}

/// Prior density sampled on a grid, with first and (optionally) second
/// derivatives.
///
/// Integrals against the prior run over [`PriorDensity::support`] only. A
/// rectangle prior records the density jumps at its two edges instead of
/// representing the edge derivatives as delta functions.
#[derive(Debug, Clone)]
pub struct PriorDensity {
    grid: ParameterGrid,
    density: Vec<f64>,
    derivative: Vec<f64>,
    second: Option<Vec<f64>>,
    kind: PriorKind,
    support: Range<usize>,
    edge_jumps: [f64; 2],
}

impl PriorDensity {
    /// Uniform prior of width `width` centered at `center`. Both edges must be
    /// grid nodes.
    pub fn rectangle(grid: ParameterGrid, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rectangle width must be positive, got {width}"
            )));
        }
        let lo = grid.node_index(center - 0.5 * width)?;
        let hi = grid.node_index(center + 0.5 * width)?;
        let height = 1.0 / width;
        let density = (0..grid.len())
            .map(|i| if (lo..=hi).contains(&i) { height } else { 0.0 })
            .collect();
        Self::finish(
            grid,
            density,
            vec![0.0; grid.len()],
            Some(vec![0.0; grid.len()]),
            PriorKind::Rectangle { center, width },
            lo..hi + 1,
            [height, height],
        )
    }

    /// Normal prior. The density is renormalized over the grid, so a grid that
    /// truncates the tails yields the corresponding truncated normal.
    pub fn gaussian(grid: ParameterGrid, mean: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
        }
        let s2 = sigma * sigma;
        let raw = grid.sample(|x| (-(x - mean).powi(2) / (2.0 * s2)).exp());
        let mass = integrate_span(&raw, &grid, 0..grid.len())?;
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument("gaussian prior has no mass on the grid".into()));
        }
        let density: Vec<f64> = raw.iter().map(|v| v / mass).collect();
        let derivative = grid.nodes().zip(&density).map(|(x, p)| -(x - mean) / s2 * p).collect();
        let second = grid
            .nodes()
            .zip(&density)
            .map(|(x, p)| ((x - mean).powi(2) / (s2 * s2) - 1.0 / s2) * p)
            .collect();
        Self::finish(
            grid,
            density,
            derivative,
            Some(second),
            PriorKind::Gaussian { mean, sigma },
            0..grid.len(),
            [0.0, 0.0],
        )
    }

    /// Raised-cosine bump of total width `width`; both ends must be nodes.
    pub fn raised_cosine(grid: ParameterGrid, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "window width must be positive, got {width}"
            )));
        }
        let lo = grid.node_index(center - 0.5 * width)?;
        let hi = grid.node_index(center + 0.5 * width)?;
        let k = 2.0 * PI / width;
        let inside = |i: usize| (lo..=hi).contains(&i);
        let mut density = vec![0.0; grid.len()];
        let mut derivative = vec![0.0; grid.len()];
        let mut second = vec![0.0; grid.len()];
        for i in 0..grid.len() {
            if inside(i) {
                let u = grid.point(i) - center;
                density[i] = (1.0 + (k * u).cos()) / width;
                derivative[i] = -k * (k * u).sin() / width;
                second[i] = -k * k * (k * u).cos() / width;
            }
        }
        // exact zeros at the edges
        density[lo] = 0.0;
        density[hi] = 0.0;
        derivative[lo] = 0.0;
        derivative[hi] = 0.0;
        Self::finish(
            grid,
            density,
            derivative,
            Some(second),
            PriorKind::RaisedCosine { center, width },
            lo..hi + 1,
            [0.0, 0.0],
        )
    }

    /// Flat top on `[center − width/2, center + width/2]` joined to zero by
    /// raised-cosine ramps of length `ramp`. The outer ends must be nodes.
    pub fn plateau(grid: ParameterGrid, center: f64, width: f64, ramp: f64) -> Result<Self> {
        if !(width > 0.0) || !(ramp > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "plateau needs positive width and ramp, got {width}, {ramp}"
            )));
        }
        let half = 0.5 * width;
        let lo = grid.node_index(center - half - ramp)?;
        let hi = grid.node_index(center + half + ramp)?;
        let height = 1.0 / (width + ramp);
        let k = PI / ramp;
        let mut density = vec![0.0; grid.len()];
        let mut derivative = vec![0.0; grid.len()];
        let mut second = vec![0.0; grid.len()];
        for i in lo + 1..hi {
            let u = grid.point(i) - center;
            let a = u.abs();
            if a <= half {
                density[i] = height;
            } else {
                let s = u.signum();
                let t = k * (a - half);
                density[i] = 0.5 * height * (1.0 + t.cos());
                derivative[i] = -0.5 * height * k * t.sin() * s;
                second[i] = -0.5 * height * k * k * t.cos();
            }
        }
        second[lo] = 0.5 * height * k * k;
        second[hi] = 0.5 * height * k * k;
        Self::finish(
            grid,
            density,
            derivative,
            Some(second),
            PriorKind::Plateau { center, width, ramp },
            lo..hi + 1,
            [0.0, 0.0],
        )
    }

    /// Prior given by samples; derivatives come from central differences.
    pub fn tabulated(grid: ParameterGrid, density: Vec<f64>) -> Result<Self> {
        let derivative = central_difference(&density, &grid)?;
        let second = central_difference(&derivative, &grid)?;
        Self::tabulated_with_derivatives(grid, density, derivative, Some(second))
    }

    /// Prior given by samples together with caller-supplied derivatives.
    pub fn tabulated_with_derivatives(
        grid: ParameterGrid,
        density: Vec<f64>,
        derivative: Vec<f64>,
        second: Option<Vec<f64>>,
    ) -> Result<Self> {
        for (name, v) in [("density", &density), ("derivative", &derivative)] {
            if v.len() != grid.len() {
                return Err(Error::InvalidArgument(format!(
                    "prior {name} has {} samples, grid has {}",
                    v.len(),
                    grid.len()
                )));
            }
        }
        if let Some(s) = &second {
            if s.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    expected: grid.len(),
                    actual: s.len(),
                });
            }
        }
        let n = grid.len();
        Self::finish(
            grid,
            density,
            derivative,
            second,
            PriorKind::Tabulated,
            0..n,
            [0.0, 0.0],
        )
    }

    fn finish(
        grid: ParameterGrid,
        density: Vec<f64>,
        derivative: Vec<f64>,
        second: Option<Vec<f64>>,
        kind: PriorKind,
        support: Range<usize>,
        edge_jumps: [f64; 2],
    ) -> Result<Self> {
        if let Some(index) = density.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prior density must be finite and nonnegative (index {index}: {})",
                density[index]
            )));
        }
        if let Some(index) = derivative.iter().position(|d| !d.is_finite()) {
            return Err(Error::NonFinite {
                index,
                context: "prior derivative",
            });
        }
        let mass = integrate_span(&density, &grid, support.clone())?;
        if (mass - 1.0).abs() > PRIOR_NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "prior integrates to {mass}, expected 1"
            )));
        }
        Ok(Self {
            grid,
            density,
            derivative,
            second,
            kind,
            support,
            edge_jumps,
        })
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn derivative(&self) -> &[f64] {
        &self.derivative
    }

    pub fn second_derivative(&self) -> Option<&[f64]> {
        self.second.as_deref()
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    /// Node range (end-exclusive) that carries the prior mass.
    pub fn support(&self) -> Range<usize> {
        self.support.clone()
    }

    /// Lower and upper parameter values of the support.
    pub fn support_interval(&self) -> (f64, f64) {
        (
            self.grid.point(self.support.start),
            self.grid.point(self.support.end - 1),
        )
    }

    /// Magnitude of the density jump at the lower and upper support edges.
    pub fn edge_jumps(&self) -> [f64; 2] {
        self.edge_jumps
    }

    pub fn has_declared_edges(&self) -> bool {
        self.edge_jumps.iter().any(|j| *j > 0.0)
    }

    /// Whether the density drops to (numerically) zero at both ends of its
    /// support, so that no undeclared edge sits there.
    pub fn vanishes_at_support_ends(&self) -> bool {
        let peak = self.density.iter().cloned().fold(0.0, f64::max);
        let tol = 1e-4 * peak;
        self.density[self.support.start] <= tol && self.density[self.support.end - 1] <= tol
    }

    pub fn mean(&self) -> f64 {
        let m: Vec<f64> = self.grid.nodes().zip(&self.density).map(|(x, p)| x * p).collect();
        integrate_span(&m, &self.grid, self.support()).unwrap_or(f64::NAN)
    }
}

/// How the outcome-probability derivatives were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    /// Supplied in closed form with the model.
    Analytic,
    /// Central differences of the tabulated probabilities; accurate to
    /// `O(h²)`, so Fisher information inherits an `O(h²)` relative error.
    FiniteDifference,
}

/// Outcome probabilities and their derivatives at a single parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeJet {
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Option<Vec<f64>>,
}

/// Finite-alphabet outcome model `p(x|φ)` tabulated on a grid.
///
/// Tables are indexed `[outcome][node]`.
#[derive(Debug, Clone)]
pub struct ConditionalModel {
    grid: ParameterGrid,
    prob: Vec<Vec<f64>>,
    deriv: Vec<Vec<f64>>,
    second: Option<Vec<Vec<f64>>>,
    source: DerivativeSource,
}

impl ConditionalModel {
    /// Builds the model by evaluating an analytic closure at every node.
    pub fn from_fn<F>(grid: ParameterGrid, outcomes: usize, jet: F) -> Result<Self>
    where
        F: Fn(f64) -> OutcomeJet,
    {
        if outcomes == 0 {
            return Err(Error::InvalidArgument("outcome alphabet is empty".into()));
        }
        let n = grid.len();
        let mut prob = vec![vec![0.0; n]; outcomes];
        let mut deriv = vec![vec![0.0; n]; outcomes];
        let mut second: Option<Vec<Vec<f64>>> = None;
        for (i, phi) in grid.nodes().enumerate() {
            let j = jet(phi);
            if j.p.len() != outcomes || j.dp.len() != outcomes {
                return Err(Error::InvalidArgument(format!(
                    "model closure returned {} probabilities for {outcomes} outcomes",
                    j.p.len()
                )));
            }
            for x in 0..outcomes {
                prob[x][i] = j.p[x];
                deriv[x][i] = j.dp[x];
            }
            if let Some(d2) = j.d2p {
                let s = second.get_or_insert_with(|| vec![vec![0.0; n]; outcomes]);
                for x in 0..outcomes {
                    s[x][i] = d2[x];
                }
            }
        }
        Self::from_tables(grid, prob, deriv, second, DerivativeSource::Analytic)
    }

    /// Tabulated `K × points` probability matrix; derivatives by central
    /// differences.
    pub fn tabulated(grid: ParameterGrid, prob: Vec<Vec<f64>>) -> Result<Self> {
        let deriv = prob
            .iter()
            .map(|row| central_difference(row, &grid))
            .collect::<Result<Vec<_>>>()?;
        let second = deriv
            .iter()
            .map(|row| central_difference(row, &grid))
            .collect::<Result<Vec<_>>>()?;
        Self::from_tables(grid, prob, deriv, Some(second), DerivativeSource::FiniteDifference)
    }

    pub fn from_tables(
        grid: ParameterGrid,
        prob: Vec<Vec<f64>>,
        deriv: Vec<Vec<f64>>,
        second: Option<Vec<Vec<f64>>>,
        source: DerivativeSource,
    ) -> Result<Self> {
        if prob.is_empty() {
            return Err(Error::InvalidArgument("outcome alphabet is empty".into()));
        }
        if deriv.len() != prob.len() {
            return Err(Error::InvalidArgument(
                "derivative table has a different outcome count".into(),
            ));
        }
        let n = grid.len();
        let rows = prob.iter().chain(&deriv).chain(second.iter().flatten());
        for row in rows {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
        }
        let model = Self {
            grid,
            prob,
            deriv,
            second,
            source,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.grid.len() {
            let mut sum = 0.0;
            let mut dsum = 0.0;
            for x in 0..self.prob.len() {
                let p = self.prob[x][i];
                let d = self.deriv[x][i];
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "p(x={x}|φ) = {p} at node {i} is not a probability"
                    )));
                }
                if !d.is_finite() {
                    return Err(Error::NonFinite {
                        index: i,
                        context: "outcome derivative",
                    });
                }
                sum += p;
                dsum += d;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "outcome probabilities sum to {sum} at node {i}"
                )));
            }
            if dsum.abs() > DERIVATIVE_SUM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "outcome derivatives sum to {dsum} at node {i}"
                )));
            }
        }
        Ok(())
    }

    /// Model whose outcome does not depend on `φ`.
    pub fn constant(grid: ParameterGrid, probs: &[f64]) -> Result<Self> {
        let k = probs.len();
        let n = grid.len();
        Self::from_tables(
            grid,
            probs.iter().map(|p| vec![*p; n]).collect(),
            vec![vec![0.0; n]; k],
            Some(vec![vec![0.0; n]; k]),
            DerivativeSource::Analytic,
        )
    }

    /// Binary interferometric model `p(1|φ) = cos²(φ/2)`, `p(0|φ) = sin²(φ/2)`.
    /// Outcome 0 is the "sin²" result.
    pub fn cos2(grid: ParameterGrid) -> Result<Self> {
        Self::cos2_scaled(grid, 1.0)
    }

    /// `p(1|φ) = cos²(mφ/2)`: the phase accumulates `m` times faster.
    pub fn cos2_scaled(grid: ParameterGrid, m: f64) -> Result<Self> {
        // half-angle forms keep p and ṗ consistent where cos²(mφ/2) rounds to 0
        Self::from_fn(grid, 2, |phi| {
            let (s, c) = (0.5 * m * phi).sin_cos();
            let cross = m * s * c;
            let curv = 0.5 * m * m * (c * c - s * s);
            OutcomeJet {
                p: vec![s * s, c * c],
                dp: vec![cross, -cross],
                d2p: Some(vec![curv, -curv]),
            }
        })
    }

    /// Deterministic model that reveals which of `cells` equal-width cells of
    /// the grid contains `φ`.
    pub fn revealing_cells(grid: ParameterGrid, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidArgument("need at least one cell".into()));
        }
        let n = grid.len();
        let width = (grid.upper() - grid.lower()) / cells as f64;
        let mut prob = vec![vec![0.0; n]; cells];
        for (i, phi) in grid.nodes().enumerate() {
            let c = (((phi - grid.lower()) / width).floor() as usize).min(cells - 1);
            prob[c][i] = 1.0;
        }
        Self::from_tables(grid, prob, vec![vec![0.0; n]; cells], None, DerivativeSource::Analytic)
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn num_outcomes(&self) -> usize {
        self.prob.len()
    }

    pub fn source(&self) -> DerivativeSource {
        self.source
    }

    pub fn prob(&self, outcome: usize, node: usize) -> f64 {
        self.prob[outcome][node]
    }

    pub fn derivative(&self, outcome: usize, node: usize) -> f64 {
        self.deriv[outcome][node]
    }

    pub fn second_derivative(&self, outcome: usize, node: usize) -> Option<f64> {
        self.second.as_ref().map(|s| s[outcome][node])
    }

    pub fn prob_row(&self, outcome: usize) -> &[f64] {
        &self.prob[outcome]
    }

    pub fn derivative_row(&self, outcome: usize) -> &[f64] {
        &self.deriv[outcome]
    }

    /// Model for `copies` independent repetitions; outcomes are indexed in
    /// base `K` with the first copy as the least significant digit.
    pub fn product(&self, copies: usize, budget: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidArgument("need at least one copy".into()));
        }
        let k = self.num_outcomes();
        let required = (k as u128).checked_pow(copies as u32).unwrap_or(u128::MAX);
        if required > budget as u128 {
            return Err(Error::BudgetExceeded { required, budget });
        }
        if copies == 1 {
            return Ok(self.clone());
        }
        // Append one copy at a time as the next most significant digit,
        // applying the product rule to first and second derivatives.
        let n = self.grid.len();
        let mut prob = self.prob.clone();
        let mut deriv = self.deriv.clone();
        let mut second = self.second.clone();
        for _ in 1..copies {
            let inner = prob.len();
            let mut next_prob = Vec::with_capacity(inner * k);
            let mut next_deriv = Vec::with_capacity(inner * k);
            let mut next_second = second.as_ref().map(|_| Vec::with_capacity(inner * k));
            for x in 0..k {
                for y in 0..inner {
                    let (px, dx) = (&self.prob[x], &self.deriv[x]);
                    let (py, dy) = (&prob[y], &deriv[y]);
                    next_prob.push((0..n).map(|i| py[i] * px[i]).collect::<Vec<f64>>());
                    next_deriv.push((0..n).map(|i| dy[i] * px[i] + py[i] * dx[i]).collect::<Vec<f64>>());
                    if let (Some(out), Some(sy), Some(src)) =
                        (next_second.as_mut(), second.as_ref(), self.second.as_ref())
                    {
                        let (sy, sx) = (&sy[y], &src[x]);
                        out.push(
                            (0..n)
                                .map(|i| sy[i] * px[i] + 2.0 * dy[i] * dx[i] + py[i] * sx[i])
                                .collect::<Vec<f64>>(),
                        );
                    }
                }
            }
            prob = next_prob;
            deriv = next_deriv;
            second = next_second;
        }
        Self::from_tables(self.grid, prob, deriv, second, self.source)
    }

    /// Merges outcomes: `groups[x]` names the new outcome that old outcome `x`
    /// is mapped to.
    pub fn coarsen(&self, groups: &[usize]) -> Result<Self> {
        if groups.len() != self.num_outcomes() {
            return Err(Error::InvalidArgument(format!(
                "grouping covers {} outcomes, model has {}",
                groups.len(),
                self.num_outcomes()
            )));
        }
        let m = groups.iter().max().map_or(0, |g| g + 1);
        let n = self.grid.len();
        let mut prob = vec![vec![0.0; n]; m];
        let mut deriv = vec![vec![0.0; n]; m];
        let mut second = self.second.as_ref().map(|_| vec![vec![0.0; n]; m]);
        for (x, &g) in groups.iter().enumerate() {
            for i in 0..n {
                prob[g][i] += self.prob[x][i];
                deriv[g][i] += self.deriv[x][i];
            }
            if let (Some(out), Some(src)) = (second.as_mut(), self.second.as_ref()) {
                for i in 0..n {
                    out[g][i] += src[x][i];
                }
            }
        }
        Self::from_tables(self.grid, prob, deriv, second, self.source)
    }
}

/// Prior together with an outcome model on the same grid.
#[derive(Debug, Clone)]
pub struct JointModel {
    prior: PriorDensity,
    conditional: ConditionalModel,
}

impl JointModel {
    pub fn new(prior: PriorDensity, conditional: ConditionalModel) -> Result<Self> {
        if prior.grid() != conditional.grid() {
            return Err(Error::InvalidArgument(
                "prior and outcome model live on different grids".into(),
            ));
        }
        let joint = Self { prior, conditional };
        let total: f64 = marginal_outcome(&joint).iter().sum();
        if (total - 1.0).abs() > PRIOR_NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!("joint distribution sums to {total}")));
        }
        Ok(joint)
    }

    pub fn prior(&self) -> &PriorDensity {
        &self.prior
    }

    pub fn conditional(&self) -> &ConditionalModel {
        &self.conditional
    }

    pub fn grid(&self) -> &ParameterGrid {
        self.prior.grid()
    }

    /// `p(x, φ)` at a node.
    pub fn joint(&self, outcome: usize, node: usize) -> f64 {
        self.conditional.prob(outcome, node) * self.prior.density()[node]
    }

    /// `∂p(x, φ)/∂φ` at a node (inside the support).
    pub fn joint_derivative(&self, outcome: usize, node: usize) -> f64 {
        self.conditional.derivative(outcome, node) * self.prior.density()[node]
            + self.conditional.prob(outcome, node) * self.prior.derivative()[node]
    }
}

/// Pointwise Fisher information `F(φ)`; divergent nodes hold `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherProfile {
    grid: ParameterGrid,
    values: Vec<f64>,
}

impl FisherProfile {
    pub fn new(grid: ParameterGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Fisher information must be nonnegative, got {} at node {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Profile with the same value at every node.
    pub fn constant(grid: ParameterGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_divergent_at(&self, node: usize) -> bool {
        self.values[node].is_infinite()
    }

    pub fn divergent_nodes(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.is_divergent_at(i)).collect()
    }
}

/// Where `p = 0`, slopes up to this size are rounding noise and count as zero.
pub const ZERO_SLOPE_TOL: f64 = 1e-12;

/// Single Fisher term `ṗ²/p`. `None` flags divergence (`p = 0`, `ṗ ≠ 0`).
///
/// When `p` and `ṗ` both vanish the term is the L'Hôpital limit `2p̈` if a
/// second derivative is known, and `0` otherwise.
pub fn fisher_term(p: f64, dp: f64, d2p: Option<f64>) -> Option<f64> {
    if p > 0.0 {
        let t = dp * dp / p;
        if t.is_finite() {
            return Some(t);
        }
        return None;
    }
    if dp.abs() > ZERO_SLOPE_TOL {
        return None;
    }
    Some(d2p.map_or(0.0, |s| (2.0 * s).max(0.0)))
}

pub fn fisher_information(model: &ConditionalModel) -> FisherProfile {
    let n = model.grid().len();
    let values = (0..n)
        .map(|i| {
            let mut f = 0.0;
            for x in 0..model.num_outcomes() {
                match fisher_term(model.prob(x, i), model.derivative(x, i), model.second_derivative(x, i)) {
                    Some(t) => f += t,
                    None => return f64::INFINITY,
                }
            }
            f
        })
        .collect();
    FisherProfile {
        grid: *model.grid(),
        values,
    }
}

/// `∫ √F(φ) dφ` over the node range `support`.
pub fn jeffreys_length(profile: &FisherProfile, support: Range<usize>) -> Result<f64> {
    if support.end > profile.values.len() || support.start >= support.end {
        return Err(Error::InvalidArgument(format!(
            "support {support:?} is not inside the grid"
        )));
    }
    if let Some(i) = support.clone().find(|&i| profile.is_divergent_at(i)) {
        return Err(Error::Divergent(format!(
            "Fisher information diverges at node {i} inside the support"
        )));
    }
    let root: Vec<f64> = profile.values.iter().map(|f| f.sqrt()).collect();
    integrate_span(&root, &profile.grid, support)
}

/// [`jeffreys_length`] between two node locations.
pub fn jeffreys_length_between(profile: &FisherProfile, lower: f64, upper: f64) -> Result<f64> {
    let lo = profile.grid.node_index(lower)?;
    let hi = profile.grid.node_index(upper)?;
    jeffreys_length(profile, lo..hi + 1)
}

/// Differential entropy `−∫ p ln p` in nats.
pub fn prior_entropy(prior: &PriorDensity) -> f64 {
    let integrand: Vec<f64> = prior
        .density()
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .collect();
    integrate_span(&integrand, prior.grid(), prior.support()).expect("finite integrand")
}

/// Marginal outcome distribution `p̄ₓ = ∫ p(x|φ) p(φ) dφ`.
pub fn marginal_outcome(joint: &JointModel) -> Vec<f64> {
    let grid = joint.grid();
    (0..joint.conditional().num_outcomes())
        .map(|x| {
            let row: Vec<f64> = (0..grid.len()).map(|i| joint.joint(x, i)).collect();
            integrate_span(&row, grid, joint.prior().support()).expect("finite joint")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> ParameterGrid {
        ParameterGrid::new(lo, hi, n).unwrap()
    }

    #[test]
    fn constant_model_has_zero_fisher() {
        let g = grid(0.0, 1.0, 11);
        let m = ConditionalModel::constant(g, &[0.2, 0.3, 0.5]).unwrap();
        assert!(fisher_information(&m).values().iter().all(|f| *f == 0.0));
    }

    #[test]
    fn cos2_fisher_is_one() {
        let g = grid(0.0, PI, 1001);
        let f = fisher_information(&ConditionalModel::cos2(g).unwrap());
        for (i, v) in f.values().iter().enumerate() {
            assert!((v - 1.0).abs() < 1e-9, "node {i}: {v}");
        }
    }

    #[test]
    fn fisher_term_conventions() {
        assert_eq!(fisher_term(0.5, 1.0, None), Some(2.0));
        assert_eq!(fisher_term(0.0, 0.0, None), Some(0.0));
        assert_eq!(fisher_term(0.0, 0.0, Some(0.25)), Some(0.5));
        assert_eq!(fisher_term(0.0, 0.1, None), None);
    }

    #[test]
    fn divergence_is_flagged() {
        let g = grid(0.0, 1.0, 5);
        // p(0|φ) = φ hits zero with a nonzero slope at φ = 0
        let m = ConditionalModel::from_fn(g, 2, |x| OutcomeJet {
            p: vec![x, 1.0 - x],
            dp: vec![1.0, -1.0],
            d2p: None,
        })
        .unwrap();
        let f = fisher_information(&m);
        assert_eq!(f.divergent_nodes(), vec![0, 4]);
        assert!(jeffreys_length(&f, 1..4).is_ok());
        assert!(matches!(jeffreys_length(&f, 0..3), Err(Error::Divergent(_))));
    }

    #[test]
    fn rejects_unnormalized_rows() {
        let g = grid(0.0, 1.0, 5);
        assert!(ConditionalModel::constant(g, &[0.5, 0.4]).is_err());
        assert!(ConditionalModel::constant(g, &[1.5, -0.5]).is_err());
        let bad = ConditionalModel::from_fn(g, 2, |_| OutcomeJet {
            p: vec![0.5, 0.5],
            dp: vec![0.1, 0.1],
            d2p: None,
        });
        assert!(bad.is_err());
    }

    #[test]
    fn jeffreys_constant_profiles() {
        let g = grid(0.0, PI, 101);
        let f = FisherProfile::constant(g, 1.0).unwrap();
        assert!((jeffreys_length(&f, 0..101).unwrap() - PI).abs() < 1e-12);
        let g = grid(0.0, 2.0 * PI, 101);
        let n = 7.0;
        let f = FisherProfile::constant(g, n * n).unwrap();
        let len = jeffreys_length_between(&f, 0.0, 2.0 * PI).unwrap();
        assert!((len - 2.0 * PI * n).abs() < 1e-10);
    }

    #[test]
    fn rectangle_entropy_is_log_width() {
        let g = grid(-1.0, 3.0, 401);
        for d in [0.5, 1.0, 2.0] {
            let p = PriorDensity::rectangle(g, 1.0, d).unwrap();
            assert!((prior_entropy(&p) - f64::ln(d)).abs() < 1e-12);
        }
        assert!(PriorDensity::rectangle(g, 1.0, 0.333).is_err());
    }

    #[test]
    fn gaussian_entropy() {
        let sigma = 0.7;
        let g = grid(-10.0 * sigma, 10.0 * sigma, 4001);
        let p = PriorDensity::gaussian(g, 0.0, sigma).unwrap();
        let want = 0.5 * (2.0 * PI * std::f64::consts::E * sigma * sigma).ln();
        assert!((prior_entropy(&p) - want).abs() < 1e-6);
    }

    #[test]
    fn smooth_priors_normalize() {
        let g = grid(-2.0, 2.0, 401);
        let rc = PriorDensity::raised_cosine(g, 0.0, 2.0).unwrap();
        assert_eq!(rc.support(), 100..301);
        assert!(rc.vanishes_at_support_ends());
        let pl = PriorDensity::plateau(g, 0.0, 2.0, 1.0).unwrap();
        assert_eq!(pl.support(), 0..401);
        assert!(pl.vanishes_at_support_ends());
        let r = PriorDensity::rectangle(g, 0.0, 2.0).unwrap();
        assert!(!r.vanishes_at_support_ends());
        assert!(r.has_declared_edges());
    }

    #[test]
    fn tabulated_prior_checks_mass() {
        let g = grid(0.0, 1.0, 11);
        assert!(PriorDensity::tabulated(g, vec![1.0; 11]).is_ok());
        assert!(PriorDensity::tabulated(g, vec![2.0; 11]).is_err());
        let mut neg = vec![1.0; 11];
        neg[3] = -0.1;
        assert!(PriorDensity::tabulated(g, neg).is_err());
    }

    #[test]
    fn marginals() {
        let g = grid(0.0, PI, 2001);
        let prior = PriorDensity::rectangle(g, 0.5 * PI, PI).unwrap();
        let j = JointModel::new(prior.clone(), ConditionalModel::cos2(g).unwrap()).unwrap();
        let m = marginal_outcome(&j);
        assert!((m[0] - 0.5).abs() < 1e-6 && (m[1] - 0.5).abs() < 1e-6);

        let j = JointModel::new(prior.clone(), ConditionalModel::constant(g, &[0.1, 0.9]).unwrap()).unwrap();
        let m = marginal_outcome(&j);
        assert!((m[0] - 0.1).abs() < 1e-12 && (m[1] - 0.9).abs() < 1e-12);

        let j = JointModel::new(prior, ConditionalModel::constant(g, &[0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(marginal_outcome(&j)[0], 0.0);
    }

    #[test]
    fn product_of_two_binary_models() {
        let g = grid(0.2, 2.9, 101);
        let m = ConditionalModel::cos2(g).unwrap();
        let p2 = m.product(2, 4096).unwrap();
        assert_eq!(p2.num_outcomes(), 4);
        let f1 = fisher_information(&m);
        let f2 = fisher_information(&p2);
        for (a, b) in f1.values().iter().zip(f2.values()) {
            assert!((2.0 * a - b).abs() < 1e-9);
        }
        assert!(matches!(m.product(13, 4096), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn coarsening_everything_kills_information() {
        let g = grid(0.2, 2.9, 101);
        let m = ConditionalModel::cos2(g).unwrap().coarsen(&[0, 0]).unwrap();
        assert_eq!(m.num_outcomes(), 1);
        assert!(fisher_information(&m).values().iter().all(|f| f.abs() < 1e-12));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let prior = PriorDensity::rectangle(grid(0.0, 1.0, 11), 0.5, 1.0).unwrap();
        let model = ConditionalModel::cos2(grid(0.0, 1.0, 21)).unwrap();
        assert!(JointModel::new(prior, model).is_err());
    }
}
