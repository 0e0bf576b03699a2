//! Upper bounds on mutual information in terms of Fisher information, and the
//! Bayesian mean-square-error lower bounds derived from them.
//!
//! Every bound is returned as a [`BoundReport`] carrying its units and
//! direction, so an MI upper bound cannot be compared against an MSE lower
//! bound by accident. Divergent quantities are reported through
//! [`ValidityFlag`]s with no value rather than as errors.

use std::f64::consts::{E, PI};
use std::fmt;

use crate::numerics::{central_difference, integrate_span, tricomi_u, ParameterGrid};
use crate::stat_model::{
    fisher_information, fisher_term, jeffreys_length, jeffreys_length_between, prior_entropy, FisherProfile,
    JointModel, PriorDensity, PriorKind,
};
use crate::{Error, Result};

/// `2/(πe)`, the factor separating the entropy-based MSE bounds from van Trees.
pub const TWO_OVER_PI_E: f64 = 2.0 / (PI * E);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Nats,
    SquaredParameter,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Nats => "nats",
            Units::SquaredParameter => "param^2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    UpperBoundOnMi,
    LowerBoundOnMse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::UpperBoundOnMi => "mi-upper",
            Direction::LowerBoundOnMse => "mse-lower",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidityFlag {
    /// `P = ∫ ṗ²/p` is infinite (sharp prior edges).
    PriorInformationDivergent,
    /// `F(φ)` is infinite somewhere the prior has mass.
    FisherDivergent,
    /// Noiseless channel: no finite Fisher-information cap exists.
    NoiselessUnbounded,
    /// Amplitude-damping cap taken from the dephasing formula.
    AmplitudeDampingCapAssumed,
}

impl fmt::Display for ValidityFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidityFlag::PriorInformationDivergent => "P divergent",
            ValidityFlag::FisherDivergent => "F divergent",
            ValidityFlag::NoiselessUnbounded => "noiseless: unbounded",
            ValidityFlag::AmplitudeDampingCapAssumed => "amplitude-damping cap assumed",
        })
    }
}

/// A named bound value with units, direction and validity flags.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: &'static str,
    /// `None` exactly when a flag marks the bound as divergent/inapplicable.
    pub value: Option<f64>,
    pub units: Units,
    pub direction: Direction,
    /// Echo of the inputs the bound was evaluated with.
    pub inputs: Vec<(String, String)>,
    pub flags: Vec<ValidityFlag>,
    /// Secondary numbers (closed forms, intermediate integrals).
    pub details: Vec<(&'static str, f64)>,
}

impl BoundReport {
    fn new(name: &'static str, value: f64, units: Units, direction: Direction) -> Self {
        Self {
            name,
            value: Some(value),
            units,
            direction,
            inputs: Vec::new(),
            flags: Vec::new(),
            details: Vec::new(),
        }
    }

    fn flagged(name: &'static str, units: Units, direction: Direction, flag: ValidityFlag) -> Self {
        Self {
            name,
            value: None,
            units,
            direction,
            inputs: Vec::new(),
            flags: vec![flag],
            details: Vec::new(),
        }
    }

    pub fn mi(name: &'static str, value: f64) -> Self {
        Self::new(name, value, Units::Nats, Direction::UpperBoundOnMi)
    }

    pub fn mse(name: &'static str, value: f64) -> Self {
        Self::new(name, value, Units::SquaredParameter, Direction::LowerBoundOnMse)
    }

    pub fn mi_flagged(name: &'static str, flag: ValidityFlag) -> Self {
        Self::flagged(name, Units::Nats, Direction::UpperBoundOnMi, flag)
    }

    pub fn mse_flagged(name: &'static str, flag: ValidityFlag) -> Self {
        Self::flagged(name, Units::SquaredParameter, Direction::LowerBoundOnMse, flag)
    }

    pub fn with_input(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.inputs.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with_detail(mut self, key: &'static str, value: f64) -> Self {
        self.details.push((key, value));
        self
    }

    pub fn with_flag(mut self, flag: ValidityFlag) -> Self {
        self.flags.push(flag);
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn is_flagged(&self, flag: ValidityFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// Value or a panic naming the bound; for callers that checked flags.
    pub fn expect_value(&self) -> f64 {
        self.value
            .unwrap_or_else(|| panic!("bound {} has no value ({:?})", self.name, self.flags))
    }
}

fn describe_prior(prior: &PriorDensity) -> String {
    match prior.kind() {
        PriorKind::Rectangle { center, width } => format!("rectangle(center={center}, width={width})"),
        PriorKind::Gaussian { mean, sigma } => format!("gaussian(mean={mean}, sigma={sigma})"),
        PriorKind::RaisedCosine { center, width } => {
            format!("raised-cosine(center={center}, width={width})")
        }
        PriorKind::Plateau { center, width, ramp } => format!("plateau(center={center}, width={width}, ramp={ramp})"),
        PriorKind::Tabulated => "tabulated".to_string(),
    }
}

fn joint_inputs(report: BoundReport, joint: &JointModel) -> BoundReport {
    let g = joint.grid();
    report
        .with_input("prior", describe_prior(joint.prior()))
        .with_input("outcomes", joint.conditional().num_outcomes())
        .with_input("grid", format!("[{}, {}]x{}", g.lower(), g.upper(), g.len()))
}

/// Both sides of the pointwise Cauchy–Schwarz step
/// `Σₓ |ṗ(x,φ)| ≤ √(F(φ)p(φ)² + ṗ(φ)²)`.
///
/// Nodes outside the prior support hold zeros on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeL1Profile {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

pub fn joint_derivative_l1_bound(joint: &JointModel) -> Result<DerivativeL1Profile> {
    let fisher = fisher_information(joint.conditional());
    let prior = joint.prior();
    let n = joint.grid().len();
    let mut lhs = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in prior.support() {
        let p = prior.density()[i];
        let dp = prior.derivative()[i];
        let f = fisher.values()[i];
        if p > 0.0 && f.is_infinite() {
            return Err(Error::Divergent(format!(
                "Fisher information diverges at node {i} where the prior has mass"
            )));
        }
        let fp2 = if p > 0.0 { f * p * p } else { 0.0 };
        rhs[i] = (fp2 + dp * dp).sqrt();
        lhs[i] = (0..joint.conditional().num_outcomes())
            .map(|x| joint.joint_derivative(x, i).abs())
            .sum();
    }
    Ok(DerivativeL1Profile { lhs, rhs })
}

/// `∫ √(F p² + ṗ²) dφ`, with declared density jumps contributing their
/// magnitudes.
pub fn general_prior_integral(joint: &JointModel) -> Result<f64> {
    let prior = joint.prior();
    if !prior.has_declared_edges() && !prior.vanishes_at_support_ends() {
        return Err(Error::InvalidArgument(
            "prior does not vanish at the ends of its support and declares no edges".into(),
        ));
    }
    let profile = joint_derivative_l1_bound(joint)?;
    let smooth = integrate_span(&profile.rhs, joint.grid(), prior.support())?;
    Ok(smooth + prior.edge_jumps().iter().sum::<f64>())
}

/// Both sides of `∫ √(F p² + ṗ²) ≤ ∫ √F p + ∫ |ṗ|` over the prior support,
/// as `(combined, split)`.
pub fn root_subadditivity(joint: &JointModel) -> Result<(f64, f64)> {
    let fisher = fisher_information(joint.conditional());
    let prior = joint.prior();
    let n = joint.grid().len();
    let mut combined = vec![0.0; n];
    let mut split = vec![0.0; n];
    for i in prior.support() {
        let p = prior.density()[i];
        let dp = prior.derivative()[i];
        let f = if p > 0.0 { fisher.values()[i] } else { 0.0 };
        if f.is_infinite() {
            return Err(Error::Divergent(format!(
                "Fisher information diverges at node {i} where the prior has mass"
            )));
        }
        combined[i] = (f * p * p + dp * dp).sqrt();
        split[i] = f.sqrt() * p + dp.abs();
    }
    let support = prior.support();
    Ok((
        integrate_span(&combined, joint.grid(), support.clone())?,
        integrate_span(&split, joint.grid(), support)?,
    ))
}

/// `ln(1 + ½ ∫_Θ √F dφ)` for a prior supported on `support = (lower, upper)`.
pub fn mi_bound_finite_support(profile: &FisherProfile, support: (f64, f64)) -> Result<BoundReport> {
    let length = jeffreys_length_between(profile, support.0, support.1)?;
    Ok(BoundReport::mi("mi_bound_finite_support", (0.5 * length).ln_1p())
        .with_input("support", format!("[{}, {}]", support.0, support.1))
        .with_detail("jeffreys_length", length))
}

/// [`mi_bound_finite_support`] over the support of the joint model's prior.
pub fn mi_bound_finite_support_for(joint: &JointModel) -> Result<BoundReport> {
    let profile = fisher_information(joint.conditional());
    let length = jeffreys_length(&profile, joint.prior().support())?;
    let (lo, hi) = joint.prior().support_interval();
    Ok(joint_inputs(
        BoundReport::mi("mi_bound_finite_support", (0.5 * length).ln_1p()),
        joint,
    )
    .with_input("support", format!("[{lo}, {hi}]"))
    .with_detail("jeffreys_length", length))
}

/// `ln(½ ∫ √(F p² + ṗ²) dφ) + H(φ)`.
pub fn mi_bound_general_prior(joint: &JointModel) -> Result<BoundReport> {
    let integral = general_prior_integral(joint)?;
    let h = prior_entropy(joint.prior());
    let log_term = (0.5 * integral).ln();
    Ok(
        joint_inputs(BoundReport::mi("mi_bound_general_prior", log_term + h), joint)
            .with_detail("integral", integral)
            .with_detail("log_term", log_term)
            .with_detail("prior_entropy", h),
    )
}

/// Positive weight `f(φ)` for the variational bound, with its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    values: Vec<f64>,
    derivative: Vec<f64>,
}

impl WeightFunction {
    /// Derivative by central differences.
    pub fn new(grid: &ParameterGrid, values: Vec<f64>) -> Result<Self> {
        let derivative = central_difference(&values, grid)?;
        Self::with_derivative(values, derivative)
    }

    pub fn with_derivative(values: Vec<f64>, derivative: Vec<f64>) -> Result<Self> {
        if values.len() != derivative.len() {
            return Err(Error::LengthMismatch {
                expected: values.len(),
                actual: derivative.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight function must be nonnegative, got {} at node {i}",
                values[i]
            )));
        }
        Ok(Self { values, derivative })
    }

    /// `f = p`, reusing the prior's own derivative.
    pub fn from_prior(prior: &PriorDensity) -> Self {
        Self {
            values: prior.density().to_vec(),
            derivative: prior.derivative().to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            derivative: self.derivative.iter().map(|v| v * factor).collect(),
        }
    }
}

/// `ln(½ ∫ √(F f² + ḟ²) dφ) − ∫ p ln f dφ` for a weight `f` that vanishes at
/// both ends of the grid.
pub fn mi_bound_variational(joint: &JointModel, weight: &WeightFunction) -> Result<BoundReport> {
    let grid = joint.grid();
    let n = grid.len();
    if weight.values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: weight.values.len(),
        });
    }
    let peak = weight.values.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument("weight function is identically zero".into()));
    }
    if weight.values[0] > 1e-4 * peak || weight.values[n - 1] > 1e-4 * peak {
        return Err(Error::InvalidArgument(
            "weight function must vanish at both ends of the grid".into(),
        ));
    }
    let prior = joint.prior();
    for i in prior.support() {
        if prior.density()[i] > 0.0 && weight.values[i] <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "weight function must be positive where the prior has mass (node {i})"
            )));
        }
    }
    let fisher = fisher_information(joint.conditional());
    let mut integrand = vec![0.0; n];
    for i in 0..n {
        let f = weight.values[i];
        let df = weight.derivative[i];
        let fi = fisher.values()[i];
        if f > 0.0 && fi.is_infinite() {
            return Err(Error::Divergent(format!(
                "Fisher information diverges at node {i} where the weight is positive"
            )));
        }
        let ff2 = if f > 0.0 { fi * f * f } else { 0.0 };
        integrand[i] = (ff2 + df * df).sqrt();
    }
    let integral = integrate_span(&integrand, grid, 0..n)?;
    let cross: Vec<f64> = (0..n)
        .map(|i| {
            let p = prior.density()[i];
            if p > 0.0 {
                p * weight.values[i].ln()
            } else {
                0.0
            }
        })
        .collect();
    let cross = integrate_span(&cross, grid, prior.support())?;
    let log_term = (0.5 * integral).ln();
    Ok(
        joint_inputs(BoundReport::mi("mi_bound_variational", log_term - cross), joint)
            .with_detail("integral", integral)
            .with_detail("log_term", log_term),
    )
}

/// Fisher information of the prior's own location family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorInformation {
    Finite(f64),
    Divergent,
}

impl PriorInformation {
    pub fn value(self) -> Option<f64> {
        match self {
            PriorInformation::Finite(v) => Some(v),
            PriorInformation::Divergent => None,
        }
    }
}

/// `P = ∫ ṗ²/p dφ`. Priors with density jumps (declared edges, or mass at the
/// ends of the support) are divergent.
pub fn prior_information(prior: &PriorDensity) -> PriorInformation {
    if prior.has_declared_edges() || !prior.vanishes_at_support_ends() {
        return PriorInformation::Divergent;
    }
    let second = prior.second_derivative();
    let mut integrand = vec![0.0; prior.grid().len()];
    for i in prior.support() {
        match fisher_term(prior.density()[i], prior.derivative()[i], second.map(|s| s[i])) {
            Some(t) => integrand[i] = t,
            None => return PriorInformation::Divergent,
        }
    }
    match integrate_span(&integrand, prior.grid(), prior.support()) {
        Ok(v) => PriorInformation::Finite(v),
        Err(_) => PriorInformation::Divergent,
    }
}

/// `∫ F p dφ`, or `None` if `F` diverges where the prior has mass.
pub fn average_fisher(joint: &JointModel) -> Option<f64> {
    let fisher = fisher_information(joint.conditional());
    let prior = joint.prior();
    let mut integrand = vec![0.0; joint.grid().len()];
    for i in prior.support() {
        let p = prior.density()[i];
        if p > 0.0 {
            let f = fisher.values()[i];
            if f.is_infinite() {
                return None;
            }
            integrand[i] = f * p;
        }
    }
    integrate_span(&integrand, joint.grid(), prior.support()).ok()
}

/// `½ ln[(∫F p + P)/(2πe)] + H(φ)`.
pub fn efroimovich_mi_bound(joint: &JointModel) -> BoundReport {
    const NAME: &str = "efroimovich_mi_bound";
    let p_info = match prior_information(joint.prior()) {
        PriorInformation::Finite(v) => v,
        PriorInformation::Divergent => {
            return joint_inputs(
                BoundReport::mi_flagged(NAME, ValidityFlag::PriorInformationDivergent),
                joint,
            )
        }
    };
    let Some(avg_f) = average_fisher(joint) else {
        return joint_inputs(BoundReport::mi_flagged(NAME, ValidityFlag::FisherDivergent), joint);
    };
    let h = prior_entropy(joint.prior());
    let value = 0.5 * ((avg_f + p_info) / (2.0 * PI * E)).ln() + h;
    joint_inputs(BoundReport::mi(NAME, value), joint)
        .with_detail("average_fisher", avg_f)
        .with_detail("prior_information", p_info)
}

/// `e^{2H(φ|x)}/(2πe)`: the MSE floor implied by a conditional entropy.
pub fn entropy_mse_floor(conditional_entropy: f64) -> f64 {
    (2.0 * conditional_entropy).exp() / (2.0 * PI * E)
}

/// `1/(∫F p + P)`.
pub fn van_trees(joint: &JointModel) -> BoundReport {
    const NAME: &str = "van_trees";
    let p_info = match prior_information(joint.prior()) {
        PriorInformation::Finite(v) => v,
        PriorInformation::Divergent => {
            return joint_inputs(
                BoundReport::mse_flagged(NAME, ValidityFlag::PriorInformationDivergent),
                joint,
            )
        }
    };
    let Some(avg_f) = average_fisher(joint) else {
        return joint_inputs(BoundReport::mse_flagged(NAME, ValidityFlag::FisherDivergent), joint);
    };
    joint_inputs(BoundReport::mse(NAME, 1.0 / (avg_f + p_info)), joint)
        .with_detail("average_fisher", avg_f)
        .with_detail("prior_information", p_info)
}

/// `e^{2H(φ)}/(2πe) · (1 + ½∫_Θ √F)⁻²`. For rectangle priors with constant
/// `F` the closed form `(2/πe)(2/d + √F)⁻²` is reported as the detail
/// `closed_form`.
pub fn mse_bound_finite_support(joint: &JointModel) -> Result<BoundReport> {
    let fisher = fisher_information(joint.conditional());
    let prior = joint.prior();
    let length = jeffreys_length(&fisher, prior.support())?;
    let h = prior_entropy(prior);
    let value = entropy_mse_floor(h) / (1.0 + 0.5 * length).powi(2);
    let mut report =
        joint_inputs(BoundReport::mse("mse_bound_finite_support", value), joint).with_detail("jeffreys_length", length);
    if let PriorKind::Rectangle { width, .. } = prior.kind() {
        let vals = &fisher.values()[prior.support()];
        let (lo, hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        if hi - lo <= 1e-9 * hi.max(1.0) {
            let f = 0.5 * (lo + hi);
            let closed = TWO_OVER_PI_E / (2.0 / width + f.sqrt()).powi(2);
            report = report.with_detail("closed_form", closed);
        }
    }
    Ok(report)
}

/// `(2/πe) · (∫ √(F p² + ṗ²))⁻²`.
pub fn mse_bound_general_prior(joint: &JointModel) -> Result<BoundReport> {
    let integral = general_prior_integral(joint)?;
    Ok(joint_inputs(
        BoundReport::mse("mse_bound_general_prior", TWO_OVER_PI_E / (integral * integral)),
        joint,
    )
    .with_detail("integral", integral))
}

/// Exact and simplified MSE bounds for a Gaussian prior of width `sigma` and
/// a constant Fisher information.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMseBounds {
    /// `(2/πe)/[(√2/σ) U(−½, 0, Fσ²/2)]²`.
    pub exact: BoundReport,
    /// `(2/πe)/(F + 1/σ²)`.
    pub simplified: BoundReport,
    /// `(√2/σ) U(−½, 0, Fσ²/2) / √(F + 1/σ²)`, so that
    /// `simplified = exact · u_ratio²`.
    pub u_ratio: f64,
}

pub fn gaussian_prior_mse_bounds(fisher: f64, sigma: f64) -> Result<GaussianMseBounds> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(fisher >= 0.0) || !fisher.is_finite() {
        return Err(Error::Domain(format!(
            "Fisher information must be finite and nonnegative, got {fisher}"
        )));
    }
    let z = 0.5 * fisher * sigma * sigma;
    // U(−½, 0, z) → 1/√π as z → 0
    let u = if z == 0.0 {
        1.0 / PI.sqrt()
    } else {
        tricomi_u(-0.5, 0.0, z)?
    };
    let integral = std::f64::consts::SQRT_2 / sigma * u;
    let jensen = fisher + 1.0 / (sigma * sigma);
    let exact = BoundReport::mse("gaussian_prior_mse_exact", TWO_OVER_PI_E / (integral * integral))
        .with_input("fisher", fisher)
        .with_input("sigma", sigma)
        .with_detail("integral", integral);
    let simplified = BoundReport::mse("gaussian_prior_mse_simplified", TWO_OVER_PI_E / jensen)
        .with_input("fisher", fisher)
        .with_input("sigma", sigma);
    Ok(GaussianMseBounds {
        exact,
        simplified,
        u_ratio: integral / jensen.sqrt(),
    })
}
