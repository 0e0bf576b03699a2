//! Subcommand implementations. Each returns a [`Table`]; `main` only parses
//! arguments and writes output.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use mibound::bounds::{
    self, efroimovich_mi_bound, entropy_mse_floor, gaussian_prior_mse_bounds, mi_bound_finite_support_for,
    mi_bound_general_prior, mi_bound_variational, mse_bound_finite_support, mse_bound_general_prior, van_trees,
    WeightFunction,
};
use mibound::mi_oracle::{
    ml_estimator_oracle, mle_convergence_study, mutual_information, repeat_model_with_budget, OracleResult,
};
use mibound::quantum_metrology::{log_spaced, transition_sweep_for_noise, CapRegime, NoiseKind};
use mibound::random_models::{self, RandomModelConfig, RandomModelSpec};
use mibound::stat_model::fisher_information;
use mibound::{BoundReport, Direction, JointModel, PriorKind, Units};
use rayon::prelude::*;

use crate::output::{fmt_num, fmt_opt, DisplayUnits, Table};

/// Default seed for every seeded command.
pub const DEFAULT_SEED: u64 = 0x5EED;

fn value_in(units: DisplayUnits, report_units: Units, v: f64) -> f64 {
    match report_units {
        Units::Nats => units.convert(v),
        Units::SquaredParameter => v,
    }
}

fn unit_label(units: DisplayUnits, report_units: Units) -> &'static str {
    match report_units {
        Units::Nats => units.label(),
        Units::SquaredParameter => "param^2",
    }
}

struct Row {
    name: String,
    direction: String,
    value: Option<f64>,
    units: Units,
    flags: Vec<String>,
    details: Vec<(String, f64)>,
}

impl Row {
    fn oracle(name: &str, value: f64, units: Units) -> Self {
        Self {
            name: name.into(),
            direction: "oracle".into(),
            value: Some(value),
            units,
            flags: Vec::new(),
            details: Vec::new(),
        }
    }

    fn from_report(r: &BoundReport) -> Self {
        Self {
            name: r.name.into(),
            direction: r.direction.to_string(),
            value: r.value,
            units: r.units,
            flags: r.flags.iter().map(|f| f.to_string()).collect(),
            details: r.details.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn from_result(name: &str, direction: Direction, units: Units, r: mibound::Result<BoundReport>) -> Self {
        match r {
            Ok(report) => Self::from_report(&report),
            Err(e) => Self {
                name: name.into(),
                direction: direction.to_string(),
                value: None,
                units,
                flags: vec![format!("not applicable: {e}")],
                details: Vec::new(),
            },
        }
    }
}

/// `Some(F)` when the Fisher information is the same at every node.
fn constant_fisher(joint: &JointModel) -> Option<f64> {
    let profile = fisher_information(joint.conditional());
    let v = profile.values();
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    (hi.is_finite() && hi - lo <= 1e-9 * hi.abs().max(1.0)).then_some(0.5 * (lo + hi))
}

/// One row per bound, plus oracle rows, for `bounds`.
pub fn bounds_table(joint: &JointModel, units: DisplayUnits) -> Table {
    let oracle = mutual_information(joint);
    let mi = Direction::UpperBoundOnMi;
    let mse = Direction::LowerBoundOnMse;
    let mut rows = vec![
        Row::oracle("mi_oracle", oracle.mi, Units::Nats),
        Row::oracle("prior_entropy", oracle.h_prior, Units::Nats),
        Row::oracle("posterior_entropy", oracle.h_posterior, Units::Nats),
        Row::from_result(
            "mi_bound_finite_support",
            mi,
            Units::Nats,
            mi_bound_finite_support_for(joint),
        ),
        Row::from_result("mi_bound_general_prior", mi, Units::Nats, mi_bound_general_prior(joint)),
        Row::from_result(
            "mi_bound_variational",
            mi,
            Units::Nats,
            mi_bound_variational(joint, &WeightFunction::from_prior(joint.prior())),
        ),
        Row::from_report(&efroimovich_mi_bound(joint)),
        Row::oracle("bayes_mse_oracle", oracle.bayes_mse, Units::SquaredParameter),
        Row::from_report(&van_trees(joint)),
        Row::from_result(
            "mse_bound_finite_support",
            mse,
            Units::SquaredParameter,
            mse_bound_finite_support(joint),
        ),
        Row::from_result(
            "mse_bound_general_prior",
            mse,
            Units::SquaredParameter,
            mse_bound_general_prior(joint),
        ),
        Row {
            name: "mse_entropy_floor".into(),
            direction: mse.to_string(),
            value: Some(entropy_mse_floor(oracle.h_posterior)),
            units: Units::SquaredParameter,
            flags: Vec::new(),
            details: vec![("posterior_entropy".into(), oracle.h_posterior)],
        },
    ];
    if let (PriorKind::Gaussian { sigma, .. }, Some(f)) = (joint.prior().kind(), constant_fisher(joint)) {
        match gaussian_prior_mse_bounds(f, sigma) {
            Ok(g) => {
                let mut exact = Row::from_report(&g.exact);
                exact.details.push(("u_ratio".into(), g.u_ratio));
                rows.push(exact);
                rows.push(Row::from_report(&g.simplified));
            }
            Err(e) => rows.push(Row::from_result(
                "gaussian_prior_mse_exact",
                mse,
                Units::SquaredParameter,
                Err(e),
            )),
        }
    }

    let vt = rows.iter().find(|r| r.name == "van_trees").and_then(|r| r.value);
    let mut table = Table::new([
        "name",
        "direction",
        "value",
        "units",
        "van_trees_ratio",
        "flags",
        "details",
    ]);
    for r in rows {
        let ratio = match (r.units, vt, r.value) {
            (Units::SquaredParameter, Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        };
        let details = r
            .details
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_num(*v)))
            .collect::<Vec<_>>()
            .join(";");
        table.push(vec![
            r.name,
            r.direction,
            fmt_opt(r.value.map(|v| value_in(units, r.units, v))),
            unit_label(units, r.units).into(),
            fmt_opt(ratio),
            r.flags.join(";"),
            details,
        ]);
    }
    table
}

/// Oracle quantities for `copies` repetitions, under the posterior-mean and
/// ML estimators.
pub fn mi_table(joint: &JointModel, copies: usize, budget: usize, units: DisplayUnits) -> Result<Table> {
    if copies == 0 {
        bail!("--copies must be at least 1");
    }
    let repeated = repeat_model_with_budget(joint, copies, budget)?;
    let exact = mutual_information(&repeated);
    let ml = ml_estimator_oracle(joint, copies, budget)?;
    let mut table = Table::new(["quantity", "value", "units"]);
    let nats =
        |t: &mut Table, name: &str, v: f64| t.push(vec![name.into(), fmt_num(units.convert(v)), units.label().into()]);
    table.push(vec!["copies".into(), copies.to_string(), "count".into()]);
    table.push(vec![
        "outcomes".into(),
        repeated.conditional().num_outcomes().to_string(),
        "count".into(),
    ]);
    let rows: [(&str, &OracleResult); 2] = [("", &exact), ("ml_", &ml)];
    for (prefix, r) in rows {
        nats(&mut table, &format!("{prefix}mi"), r.mi);
        nats(&mut table, &format!("{prefix}posterior_entropy"), r.h_posterior);
        table.push(vec![
            format!("{prefix}bayes_mse"),
            fmt_num(r.bayes_mse),
            "param^2".into(),
        ]);
    }
    nats(&mut table, "prior_entropy", exact.h_prior);
    Ok(table)
}

pub fn mle_study_table(
    joint: &JointModel,
    sample_sizes: &[usize],
    trials: usize,
    seed: u64,
    units: DisplayUnits,
) -> Result<Table> {
    let study = mle_convergence_study(joint, sample_sizes, trials, seed)?;
    let mut table = Table::new([
        "N",
        "trials",
        "h_conditional",
        "asymptote",
        "gap",
        "estimate_values",
        "sparse_histogram",
    ]);
    for r in &study.rows {
        table.push(vec![
            r.samples.to_string(),
            r.trials.to_string(),
            fmt_num(units.convert(r.h_conditional)),
            fmt_num(units.convert(r.asymptote)),
            fmt_num(units.convert(r.gap)),
            r.estimate_values.to_string(),
            r.sparse_histogram.to_string(),
        ]);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub count: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub adversarial: bool,
    /// Allowed MI excess over a bound, nats.
    pub mi_tolerance: f64,
    /// Allowed relative shortfall of the Bayes MSE below a bound.
    pub mse_tolerance: f64,
    /// Slack for the pointwise proof-step inequalities.
    pub step_tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            count: 200,
            seed: DEFAULT_SEED,
            grid_points: random_models::DEFAULT_GRID_POINTS,
            adversarial: false,
            mi_tolerance: 1e-3,
            mse_tolerance: 1e-3,
            step_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MarginKind {
    /// bound − oracle, nats.
    MiNats,
    /// ln(oracle/bound).
    MseLogRatio,
    /// rhs − lhs of a pointwise or integrated inequality.
    Step,
}

impl MarginKind {
    fn label(self) -> &'static str {
        match self {
            MarginKind::MiNats => "bound-minus-oracle-nats",
            MarginKind::MseLogRatio => "log-oracle-over-bound",
            MarginKind::Step => "rhs-minus-lhs",
        }
    }
}

const CHECKS: &[(&str, MarginKind)] = &[
    ("mi_bound_finite_support", MarginKind::MiNats),
    ("mi_bound_general_prior", MarginKind::MiNats),
    ("mi_bound_variational", MarginKind::MiNats),
    ("efroimovich_mi_bound", MarginKind::MiNats),
    ("van_trees", MarginKind::MseLogRatio),
    ("mse_bound_finite_support", MarginKind::MseLogRatio),
    ("mse_bound_general_prior", MarginKind::MseLogRatio),
    ("mse_entropy_floor", MarginKind::MseLogRatio),
    ("derivative_l1_pointwise", MarginKind::Step),
    ("root_subadditivity", MarginKind::Step),
];

/// Margin of a check, or `None` when the bound was flagged or inapplicable.
type Margins = Vec<Option<f64>>;

fn model_margins(joint: &JointModel) -> Margins {
    let oracle = mutual_information(joint);
    let mi_margin = |r: mibound::Result<BoundReport>| r.ok().and_then(|b| b.value).map(|v| v - oracle.mi);
    let mse_margin =
        |r: mibound::Result<BoundReport>| r.ok().and_then(|b| b.value).map(|v| (oracle.bayes_mse / v).ln());
    let l1 = bounds::joint_derivative_l1_bound(joint).ok().map(|p| {
        p.lhs
            .iter()
            .zip(&p.rhs)
            .map(|(l, r)| r - l)
            .fold(f64::INFINITY, f64::min)
    });
    let split = bounds::root_subadditivity(joint)
        .ok()
        .map(|(combined, split)| split - combined);
    vec![
        mi_margin(mi_bound_finite_support_for(joint)),
        mi_margin(mi_bound_general_prior(joint)),
        mi_margin(mi_bound_variational(joint, &WeightFunction::from_prior(joint.prior()))),
        mi_margin(Ok(efroimovich_mi_bound(joint))),
        mse_margin(Ok(van_trees(joint))),
        mse_margin(mse_bound_finite_support(joint)),
        mse_margin(mse_bound_general_prior(joint)),
        mse_margin(Ok(BoundReport::mse(
            "mse_entropy_floor",
            entropy_mse_floor(oracle.h_posterior),
        ))),
        l1,
        split,
    ]
}

pub struct VerifyOutcome {
    pub table: Table,
    /// Reproduction dumps of every model with a violation.
    pub violations: Vec<String>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every bound against its oracle on `count` seeded random models.
pub fn verify(config: &VerifyConfig) -> Result<VerifyOutcome> {
    if config.count == 0 {
        bail!("--count must be at least 1");
    }
    let model_config = RandomModelConfig {
        grid_points: config.grid_points,
        adversarial: config.adversarial,
        ..Default::default()
    };
    let results: Vec<(RandomModelSpec, Margins)> = (0..config.count as u64)
        .into_par_iter()
        .map(|i| {
            let m = random_models::generate(&model_config, config.seed, i)?;
            Ok((m.spec, model_margins(&m.joint)))
        })
        .collect::<mibound::Result<_>>()?;

    let tolerance = |kind: MarginKind| match kind {
        MarginKind::MiNats => config.mi_tolerance,
        MarginKind::MseLogRatio => -(1.0 - config.mse_tolerance).ln(),
        MarginKind::Step => config.step_tolerance,
    };

    let mut table = Table::new([
        "check",
        "models",
        "evaluated",
        "flagged",
        "violations",
        "worst_margin",
        "worst_model",
        "margin",
    ]);
    let mut violating: Vec<usize> = Vec::new();
    let mut reasons: Vec<Vec<String>> = vec![Vec::new(); results.len()];
    for (c, &(name, kind)) in CHECKS.iter().enumerate() {
        let tol = tolerance(kind);
        let mut evaluated = 0;
        let mut violations = 0;
        let mut worst: Option<(f64, usize)> = None;
        for (m, (_, margins)) in results.iter().enumerate() {
            let Some(v) = margins[c] else { continue };
            evaluated += 1;
            if worst.is_none_or(|(w, _)| v < w) {
                worst = Some((v, m));
            }
            if !(v >= -tol) {
                violations += 1;
                violating.push(m);
                reasons[m].push(format!("{name}: margin {} < -{}", fmt_num(v), fmt_num(tol)));
            }
        }
        table.push(vec![
            name.into(),
            results.len().to_string(),
            evaluated.to_string(),
            (results.len() - evaluated).to_string(),
            violations.to_string(),
            fmt_opt(worst.map(|w| w.0)),
            worst.map(|w| w.1.to_string()).unwrap_or_default(),
            kind.label().into(),
        ]);
    }
    violating.sort_unstable();
    violating.dedup();
    let violations = violating
        .into_iter()
        .map(|m| {
            let mut dump = String::new();
            let _ = writeln!(dump, "# violation in model {m}");
            for r in &reasons[m] {
                let _ = writeln!(dump, "# {r}");
            }
            dump.push_str(&results[m].0.to_string());
            dump
        })
        .collect();
    Ok(VerifyOutcome { table, violations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetrologyConfig {
    pub etas: Vec<f64>,
    /// Explicit resource counts; when empty, `points` log-spaced integers
    /// from `n_min` to `n_max`.
    pub ns: Vec<f64>,
    pub n_min: f64,
    pub n_max: f64,
    pub points: usize,
    pub regime: CapRegime,
    pub noise: NoiseKind,
    /// Amplitude-damping Fisher constant; unused for other noise kinds.
    pub fisher_constant: Option<f64>,
}

impl Default for MetrologyConfig {
    fn default() -> Self {
        Self {
            etas: vec![0.5, 0.9, 0.99],
            ns: Vec::new(),
            n_min: 1.0,
            n_max: 1e6,
            points: 121,
            regime: CapRegime::FiniteN,
            noise: NoiseKind::Dephasing,
            fisher_constant: None,
        }
    }
}

/// Log-spaced integer resource counts, deduplicated.
pub fn integer_log_grid(n_min: f64, n_max: f64, points: usize) -> Result<Vec<f64>> {
    let mut ns: Vec<f64> = log_spaced(n_min, n_max, points)?.into_iter().map(f64::round).collect();
    ns.dedup();
    Ok(ns)
}

pub struct MetrologyOutcome {
    pub table: Table,
    pub warnings: Vec<String>,
}

/// HS→SQL transition sweep, one block of rows per `η`, in input order.
pub fn metrology(config: &MetrologyConfig, units: DisplayUnits) -> Result<MetrologyOutcome> {
    if config.etas.is_empty() {
        bail!("need at least one η value");
    }
    let ns = if config.ns.is_empty() {
        integer_log_grid(config.n_min, config.n_max, config.points)?
    } else {
        config.ns.clone()
    };
    let sweeps = config
        .etas
        .par_iter()
        .map(|&eta| transition_sweep_for_noise(config.noise, eta, &ns, config.regime, config.fisher_constant))
        .collect::<mibound::Result<Vec<_>>>()?;

    let cap_col = format!("mi_cap_{}", units.label());
    let mut table = Table::new(["eta", "N", cap_col.as_str(), "hs_ref", "sql_ref", "slope"]);
    let mut warnings = Vec::new();
    for (rows, flag) in sweeps {
        if let (Some(flag), Some(first)) = (flag, rows.first()) {
            warnings.push(format!("eta={}: {flag}", fmt_num(first.eta)));
        }
        for r in rows {
            table.push(vec![
                fmt_num(r.eta),
                fmt_num(r.n),
                fmt_opt(r.mi_cap.map(|v| units.convert(v))),
                fmt_num(units.convert(r.hs_ref)),
                fmt_num(units.convert(r.sql_ref)),
                fmt_num(r.slope),
            ]);
        }
    }
    Ok(MetrologyOutcome { table, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;

    #[test]
    fn integer_grid_is_deduplicated() {
        let ns = integer_log_grid(1.0, 100.0, 50).unwrap();
        assert_eq!(ns[0], 1.0);
        assert_eq!(*ns.last().unwrap(), 100.0);
        assert!(ns.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bounds_table_lists_every_bound() {
        let joint = model::builtin("cos2", Some(401)).unwrap().unwrap();
        let t = bounds_table(&joint, DisplayUnits::Nats);
        for name in [
            "mi_oracle",
            "mi_bound_finite_support",
            "mi_bound_general_prior",
            "mi_bound_variational",
            "efroimovich_mi_bound",
            "van_trees",
            "mse_bound_finite_support",
            "mse_bound_general_prior",
            "mse_entropy_floor",
        ] {
            assert!(t.row(name).is_some(), "{name}");
        }
        let flags = t.column("flags").unwrap();
        assert!(t.row("efroimovich_mi_bound").unwrap()[flags].contains("P divergent"));
        assert!(t.row("van_trees").unwrap()[flags].contains("P divergent"));
    }

    #[test]
    fn verify_rejects_zero_count() {
        let cfg = VerifyConfig {
            count: 0,
            ..Default::default()
        };
        assert!(verify(&cfg).is_err());
    }

    #[test]
    fn small_verify_run_passes() {
        let cfg = VerifyConfig {
            count: 8,
            grid_points: 401,
            ..Default::default()
        };
        let out = verify(&cfg).unwrap();
        assert!(out.passed(), "{:?}", out.violations);
        assert_eq!(out.table.rows.len(), CHECKS.len());
    }

    #[test]
    fn metrology_single_point() {
        let cfg = MetrologyConfig {
            etas: vec![0.9],
            ns: vec![100.0],
            ..Default::default()
        };
        let out = metrology(&cfg, DisplayUnits::Nats).unwrap();
        let v: f64 = out.table.rows[0][2].parse().unwrap();
        assert!((v - 4.5139).abs() < 1e-4);
    }

    #[test]
    fn amplitude_damping_sweep_warns_without_constant() {
        let cfg = MetrologyConfig {
            etas: vec![0.8],
            ns: vec![10.0],
            noise: NoiseKind::AmplitudeDamping,
            ..Default::default()
        };
        assert_eq!(metrology(&cfg, DisplayUnits::Nats).unwrap().warnings.len(), 1);
        let cfg = MetrologyConfig {
            fisher_constant: Some(3.0),
            ..cfg
        };
        assert!(metrology(&cfg, DisplayUnits::Nats).unwrap().warnings.is_empty());
    }
}
