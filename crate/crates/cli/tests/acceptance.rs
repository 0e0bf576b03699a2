//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::f64::consts::{E, LN_2, PI};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mibound::bounds::{
    gaussian_prior_mse_bounds, joint_derivative_l1_bound, mi_bound_finite_support_for, mse_bound_finite_support,
    root_subadditivity,
};
use mibound::mi_oracle::{bayes_quadratic_cost, mle_convergence_study, mutual_information};
use mibound::numerics::integrate;
use mibound::quantum_metrology::{
    classical_fi_of_povm, finite_n_fi_cap, log_spaced, make_channel, mi_cap, noon_outcome_model, qfi,
    transition_from_sweep, transition_sweep, CapRegime, ChannelFamily, NoiseKind, PhaseFamily, Povm, StateFamily,
};
use mibound::random_models::{generate, RandomModelConfig};
use mibound::stat_model::fisher_information;
use mibound::{ConditionalModel, JointModel, ParameterGrid, PriorDensity};
use mibound_cli::commands::{self, VerifyConfig, DEFAULT_SEED};
use mibound_cli::output::DisplayUnits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn grid(lo: f64, hi: f64, n: usize) -> Result<ParameterGrid, String> {
    ParameterGrid::new(lo, hi, n).map_err(err)
}

fn cos2_uniform(points: usize) -> Result<JointModel, String> {
    let g = grid(0.0, PI, points)?;
    JointModel::new(
        PriorDensity::rectangle(g, PI / 2.0, PI).map_err(err)?,
        ConditionalModel::cos2(g).map_err(err)?,
    )
    .map_err(err)
}

fn dominance_suite() -> Check {
    let start = Instant::now();
    let outcome = commands::verify(&VerifyConfig {
        count: 200,
        ..Default::default()
    })
    .map_err(err)?;
    let elapsed = start.elapsed();
    let margin_col = outcome.table.column("worst_margin").ok_or("no worst_margin column")?;
    let mut margins = Vec::new();
    for name in ["mi_bound_finite_support", "mi_bound_general_prior"] {
        let row = outcome.table.row(name).ok_or(format!("no {name} row"))?;
        let m: f64 = row[margin_col].parse().map_err(err)?;
        ensure(m >= -1e-3, format!("{name} worst margin {m}"))?;
        margins.push(m);
    }
    ensure(outcome.passed(), format!("{} violations", outcome.violations.len()))?;
    ensure(elapsed < Duration::from_secs(120), format!("took {elapsed:?}"))?;
    Ok(format!(
        "200 models, worst margins {:.4} / {:.4} nats, {:.1}s",
        margins[0],
        margins[1],
        elapsed.as_secs_f64()
    ))
}

fn cos2_benchmark() -> Check {
    let joint = cos2_uniform(10001)?;
    let f = fisher_information(joint.conditional());
    let worst_f = f.values()[1..10000].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    ensure(worst_f <= 1e-9, format!("|F − 1| = {worst_f}"))?;
    let bound = mi_bound_finite_support_for(&joint).map_err(err)?.expect_value();
    ensure((bound - (1.0 + PI / 2.0).ln()).abs() <= 1e-9, format!("bound {bound}"))?;
    let mi = mutual_information(&joint).mi;
    let doubled = mutual_information(&cos2_uniform(20001)?).mi;
    ensure(
        (mi - doubled).abs() < 1e-4,
        format!("grid doubling moved MI by {}", (mi - doubled).abs()),
    )?;
    ensure((mi - 0.30).abs() < 0.01, format!("MI {mi}"))?;
    ensure(mi < bound, format!("MI {mi} ≥ bound {bound}"))?;
    Ok(format!("MI {mi:.6} < bound {bound:.6}"))
}

fn gaussian_prior_chain() -> Check {
    let sigma = 0.7;
    let mut ratios = Vec::new();
    for fs2 in [0.1, 1.0, 10.0, 100.0] {
        let f = fs2 / (sigma * sigma);
        let pair = gaussian_prior_mse_bounds(f, sigma).map_err(err)?;
        let exact = pair.exact.expect_value();
        let simplified = pair.simplified.expect_value();

        let g = grid(-14.0 * sigma, 14.0 * sigma, 40001)?;
        let integrand = g.sample(|x| {
            let p = (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
            (f + x * x / sigma.powi(4)).sqrt() * p
        });
        let direct = 2.0 / (PI * E) / integrate(&integrand, &g).map_err(err)?.powi(2);
        let rel = (exact - direct).abs() / direct;
        ensure(rel <= 1e-5, format!("Fσ²={fs2}: exact vs quadrature rel {rel:e}"))?;

        let vt = 1.0 / (f + 1.0 / (sigma * sigma));
        let vt_ratio = vt / simplified;
        ensure(
            (vt_ratio - PI * E / 2.0).abs() <= 1e-9,
            format!("Fσ²={fs2}: van Trees/simplified {vt_ratio}"),
        )?;
        ratios.push(simplified / exact);
    }
    let last = ratios[3];
    ensure(
        (last - 1.0).abs() <= 1e-3,
        format!("simplified/exact at Fσ²=100 is {last}"),
    )?;
    Ok(format!(
        "simplified/exact {:.4} {:.4} {:.5} {:.5}",
        ratios[0], ratios[1], ratios[2], ratios[3]
    ))
}

fn rectangle_case() -> Check {
    let mut details = Vec::new();
    for d in [1.0, PI] {
        let g = grid(0.0, d, 4001)?;
        let joint = JointModel::new(
            PriorDensity::rectangle(g, d / 2.0, d).map_err(err)?,
            ConditionalModel::constant(g, &[0.4, 0.6]).map_err(err)?,
        )
        .map_err(err)?;
        let bound = mse_bound_finite_support(&joint).map_err(err)?.expect_value();
        let oracle = bayes_quadratic_cost(&joint);
        ensure(
            (bound - d * d / (2.0 * PI * E)).abs() <= 1e-9,
            format!("d={d}: bound {bound}"),
        )?;
        ensure(
            (oracle - d * d / 12.0).abs() <= 1e-6,
            format!("d={d}: Bayes MSE {oracle}"),
        )?;
        ensure(bound < oracle, format!("d={d}: bound {bound} ≥ oracle {oracle}"))?;

        let table = commands::bounds_table(&joint, DisplayUnits::Nats);
        let flags = table.column("flags").ok_or("no flags column")?;
        for row in ["efroimovich_mi_bound", "van_trees"] {
            let r = table.row(row).ok_or(format!("no {row} row"))?;
            ensure(r[flags].contains("P divergent"), format!("{row} flags: {:?}", r[flags]))?;
        }
        details.push(format!("d={d:.3}: {bound:.5} < {oracle:.5}"));
    }
    Ok(details.join(", "))
}

fn quantum_channel_suite() -> Check {
    let etas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];
    let kinds = [NoiseKind::Dephasing, NoiseKind::AmplitudeDamping, NoiseKind::Erasure];
    let mut worst_completeness = 0.0f64;
    for kind in kinds {
        for eta in etas {
            let ch = make_channel(kind, eta, 0.37).map_err(err)?;
            worst_completeness = worst_completeness.max(ch.completeness_error());
        }
    }
    ensure(
        worst_completeness <= 1e-12,
        format!("completeness error {worst_completeness:e}"),
    )?;

    for eta in etas {
        let q = qfi(
            &ChannelFamily::with_plus_input(NoiseKind::Dephasing, eta, 1).map_err(err)?,
            0.37,
        )
        .map_err(err)?;
        ensure((q - eta).abs() <= 1e-9, format!("dephasing QFI {q} at η={eta}"))?;
    }
    for n in 1..=8usize {
        let family = ChannelFamily::with_plus_input(NoiseKind::Dephasing, 1.0, n).map_err(err)?;
        let q = qfi(&family, 0.37).map_err(err)?;
        ensure(
            (q - (n * n) as f64).abs() <= 1e-6,
            format!("noiseless QFI {q} for N={n}"),
        )?;
    }

    let families: Vec<Box<dyn StateFamily>> = vec![
        Box::new(ChannelFamily::with_plus_input(NoiseKind::Dephasing, 0.8, 2).map_err(err)?),
        Box::new(ChannelFamily::with_plus_input(NoiseKind::AmplitudeDamping, 0.7, 1).map_err(err)?),
        Box::new(ChannelFamily::with_plus_input(NoiseKind::Erasure, 0.9, 1).map_err(err)?),
        Box::new(PhaseFamily::noon(3).map_err(err)?),
    ];
    let mut tightest = f64::INFINITY;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = &families[seed as usize % families.len()];
        let outcomes = rng.random_range(2..=6);
        let povm = Povm::random(family.dim(), outcomes, &mut rng).map_err(err)?;
        let phi = rng.random_range(-PI..PI);
        let q = qfi(family.as_ref(), phi).map_err(err)?;
        let fi = classical_fi_of_povm(family.as_ref(), &povm, phi).map_err(err)?;
        ensure(fi <= q + 1e-9 * (1.0 + q), format!("seed {seed}: FI {fi} > QFI {q}"))?;
        tightest = tightest.min(q - fi);
    }
    Ok(format!(
        "completeness {worst_completeness:.1e}, 100 POVMs, min QFI − FI {tightest:.2e}"
    ))
}

fn noisy_mi_cap() -> Check {
    let cap = mi_cap(100.0, 0.9, CapRegime::FiniteN).map_err(err)?.expect_value();
    let want = (1.0 + PI * (900.0f64 / 1.09).sqrt()).ln();
    ensure((cap - want).abs() <= 1e-9, format!("cap {cap} vs {want}"))?;
    ensure(
        finite_n_fi_cap(100.0, 0.9)
            .map_err(err)?
            .is_some_and(|f| (f - 900.0 / 1.09).abs() < 1e-9),
        "finite-N Fisher cap",
    )?;

    // N ≥ 1 is required, so the Heisenberg regime N ≤ F_as/20 only exists for η ≥ 0.99.
    for eta in [0.99, 0.999] {
        let f_as = eta / (1.0 - eta);
        let ns = log_spaced(1.0, 0.05 * f_as, 20).map_err(err)?;
        for row in transition_sweep(eta, &ns, CapRegime::FiniteN).map_err(err)? {
            ensure(
                (row.slope - 1.0).abs() <= 0.05,
                format!("η={eta} N={}: slope {}", row.n, row.slope),
            )?;
        }
    }
    let mut transitions = Vec::new();
    for eta in [0.5, 0.9, 0.99] {
        let f_as = eta / (1.0 - eta);
        let ns = log_spaced(20.0 * f_as, 1e4 * f_as, 20).map_err(err)?;
        for row in transition_sweep(eta, &ns, CapRegime::FiniteN).map_err(err)? {
            ensure(
                (row.slope - 0.5).abs() <= 0.05,
                format!("η={eta} N={}: slope {}", row.n, row.slope),
            )?;
        }
        let sweep = transition_sweep(eta, &log_spaced(1.0, 1e5, 701).map_err(err)?, CapRegime::FiniteN).map_err(err)?;
        transitions.push(transition_from_sweep(&sweep).ok_or(format!("no transition at η={eta}"))?);
    }
    ensure(
        transitions.windows(2).all(|w| w[1] > w[0]),
        format!("transitions not increasing: {transitions:?}"),
    )?;
    Ok(format!(
        "cap {cap:.9}, transitions N ≈ {:.2} / {:.2} / {:.1}",
        transitions[0], transitions[1], transitions[2]
    ))
}

fn noon_ceiling() -> Check {
    let g = grid(0.0, 2.0 * PI, 4001)?;
    let povm = Povm::sigma_x(2).map_err(err)?;
    let mut worst = 0.0f64;
    for n in [1usize, 2, 4, 8, 16] {
        let joint = JointModel::new(
            PriorDensity::rectangle(g, PI, 2.0 * PI).map_err(err)?,
            noon_outcome_model(n, &povm, g).map_err(err)?,
        )
        .map_err(err)?;
        let mi = mutual_information(&joint).mi;
        ensure(mi <= LN_2 + 1e-6, format!("N={n}: MI {mi}"))?;
        let q = qfi(&PhaseFamily::noon(n).map_err(err)?, 0.9).map_err(err)?;
        ensure(
            (q - (n * n) as f64).abs() <= 1e-9 * (n * n) as f64,
            format!("N={n}: QFI {q}"),
        )?;
        worst = worst.max(mi);
    }
    Ok(format!("max MI {worst:.6} ≤ ln 2 = {LN_2:.6}"))
}

fn mle_asymptotics() -> Check {
    let g = grid(0.0, PI, 2001)?;
    let joint = JointModel::new(
        PriorDensity::gaussian(g, PI / 2.0, 0.3).map_err(err)?,
        ConditionalModel::cos2(g).map_err(err)?,
    )
    .map_err(err)?;
    let start = Instant::now();
    let study = mle_convergence_study(&joint, &[8, 32, 128], 20000, DEFAULT_SEED).map_err(err)?;
    let elapsed = start.elapsed();
    let gaps: Vec<f64> = study.rows.iter().map(|r| r.gap).collect();
    ensure(
        gaps.windows(2).all(|w| w[1] < w[0]),
        format!("gaps not decreasing: {gaps:?}"),
    )?;
    ensure(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!("gaps {:.4} > {:.4} > {:.4}", gaps[0], gaps[1], gaps[2]))
}

fn proof_step_checks() -> Check {
    let config = RandomModelConfig::default();
    let mut worst_pointwise = f64::INFINITY;
    let mut worst_root = f64::INFINITY;
    for index in 0..50 {
        let model = generate(&config, DEFAULT_SEED, index).map_err(err)?;
        let profile = joint_derivative_l1_bound(&model.joint).map_err(err)?;
        for (node, (l, r)) in profile.lhs.iter().zip(&profile.rhs).enumerate() {
            ensure(*l <= r + 1e-9, format!("model {index} node {node}: {l} > {r}"))?;
            worst_pointwise = worst_pointwise.min(r - l);
        }
        let (lhs, rhs) = root_subadditivity(&model.joint).map_err(err)?;
        ensure(lhs <= rhs + 1e-9, format!("model {index}: {lhs} > {rhs}"))?;
        worst_root = worst_root.min(rhs - lhs);
    }
    Ok(format!(
        "50 models, min pointwise slack {worst_pointwise:.1e}, min integrated slack {worst_root:.4}"
    ))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mibound"))
        .args(args)
        .output()
        .map_err(err)?;
    ensure(
        out.status.success(),
        format!("mibound {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)),
    )?;
    Ok(out.stdout)
}

fn determinism() -> Check {
    let runs: [&[&str]; 3] = [
        &["verify", "--count", "40", "--seed", "17"],
        &["verify", "--count", "20", "--seed", "17", "--adversarial"],
        &["metrology", "--eta", "0.5,0.9,0.99", "--points", "61"],
    ];
    let mut bytes = 0;
    for args in runs {
        let first = run_cli(args)?;
        let second = run_cli(args)?;
        ensure(!first.is_empty(), format!("{args:?} printed nothing"))?;
        ensure(first == second, format!("{args:?} output differs between runs"))?;
        bytes += first.len();
    }
    Ok(format!("3 command pairs identical, {bytes} bytes each side"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("dominance suite", dominance_suite),
        ("cos² benchmark", cos2_benchmark),
        ("Gaussian-prior chain", gaussian_prior_chain),
        ("rectangle case", rectangle_case),
        ("quantum channel suite", quantum_channel_suite),
        ("noisy MI cap", noisy_mi_cap),
        ("N00N ceiling", noon_ceiling),
        ("MLE asymptotics", mle_asymptotics),
        ("proof-step checks", proof_step_checks),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
