//! Frozen reference values computed independently (closed forms and
//! high-precision evaluation of the confluent hypergeometric function).

use std::f64::consts::{E, LN_2, PI};

use mibound::bounds::{
    efroimovich_mi_bound, entropy_mse_floor, gaussian_prior_mse_bounds, mi_bound_finite_support,
    mi_bound_finite_support_for, mi_bound_general_prior, mi_bound_variational, mse_bound_finite_support,
    mse_bound_general_prior, prior_information, van_trees, PriorInformation, WeightFunction, TWO_OVER_PI_E,
};
use mibound::mi_oracle::{bayes_quadratic_cost, ml_estimator_oracle, mutual_information, repeat_model};
use mibound::numerics::{central_difference, integrate, tricomi_u};
use mibound::quantum_metrology::{
    asymptotic_fi_cap, finite_n_fi_cap, mi_cap, noon_outcome_model, qfi, CapRegime, PhaseFamily, Povm,
};
use mibound::stat_model::{fisher_information, jeffreys_length, marginal_outcome, prior_entropy, OutcomeJet};
use mibound::{ConditionalModel, FisherProfile, JointModel, ParameterGrid, PriorDensity, ValidityFlag};

/// `U(−½, 0, z)` at 30 significant digits, truncated to f64.
const TRICOMI_REFERENCE: [(f64, f64); 4] = [
    (0.05, 0.632729131391942),
    (0.5, 0.957797918589021),
    (5.0, 2.34099623156345),
    (50.0, 7.10616434188529),
];

/// `1 − ln 2`: MI of the cos² model under a uniform prior on `[0, π]`.
const COS2_UNIFORM_MI: f64 = 0.306_852_819_440_054_7;

fn grid(lo: f64, hi: f64, n: usize) -> ParameterGrid {
    ParameterGrid::new(lo, hi, n).unwrap()
}

fn cos2_uniform(points: usize) -> JointModel {
    let g = grid(0.0, PI, points);
    JointModel::new(
        PriorDensity::rectangle(g, PI / 2.0, PI).unwrap(),
        ConditionalModel::cos2(g).unwrap(),
    )
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn quadrature_examples() {
    let g = grid(0.0, 1.0, 101);
    assert!((integrate(&vec![1.0; 101], &g).unwrap() - 1.0).abs() < 1e-15);
    let g = grid(0.0, PI, 1001);
    assert!((integrate(&g.sample(f64::sin), &g).unwrap() - 2.0).abs() < 1e-9);
    let g = grid(0.0, 1.0, 11);
    assert!((integrate(&g.sample(|x| x * x), &g).unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn difference_examples() {
    let g = grid(0.0, PI, 1001);
    let d = central_difference(&g.sample(f64::sin), &g).unwrap();
    let worst = g.nodes().zip(&d).map(|(x, v)| (v - x.cos()).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-5);
    let g = grid(-2.0, 5.0, 31);
    let d = central_difference(&g.sample(|x| x), &g).unwrap();
    assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn tricomi_matches_high_precision_values() {
    for (z, want) in TRICOMI_REFERENCE {
        let got = tricomi_u(-0.5, 0.0, z).unwrap();
        assert!(rel(got, want) < 1e-12, "z={z}: {got} vs {want}");
    }
}

#[test]
fn tricomi_matches_bessel_closed_form() {
    // U(−½, 0, z) = z e^{z/2} [K₀(z/2) + K₁(z/2)] / (2√π); K via its integral
    // representation K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(νt) dt.
    let bessel_k = |nu: f64, x: f64| {
        let g = grid(0.0, 12.0, 24001);
        integrate(&g.sample(|t| (-x * t.cosh()).exp() * (nu * t).cosh()), &g).unwrap()
    };
    for z in [0.3f64, 2.0, 8.0] {
        let x = z / 2.0;
        let closed = z * x.exp() * (bessel_k(0.0, x) + bessel_k(1.0, x)) / (2.0 * PI.sqrt());
        assert!(rel(tricomi_u(-0.5, 0.0, z).unwrap(), closed) < 1e-9, "z={z}");
    }
}

#[test]
fn cos2_benchmark() {
    let joint = cos2_uniform(2001);
    let f = fisher_information(joint.conditional());
    assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
    let b = mi_bound_finite_support_for(&joint).unwrap();
    assert!((b.expect_value() - (1.0 + PI / 2.0).ln()).abs() < 1e-9);
    let mi = mutual_information(&joint).mi;
    assert!((mi - COS2_UNIFORM_MI).abs() < 1e-8);
    assert!(mi < b.expect_value());
    let marg = marginal_outcome(&joint);
    assert!((marg[0] - 0.5).abs() < 1e-6 && (marg[1] - 0.5).abs() < 1e-6);
}

#[test]
fn cos2_oracle_is_grid_converged() {
    let coarse = mutual_information(&cos2_uniform(10001)).mi;
    let fine = mutual_information(&cos2_uniform(20001)).mi;
    assert!((coarse - fine).abs() < 1e-4);
    assert!((fine - COS2_UNIFORM_MI).abs() < 1e-9);
}

#[test]
fn oracle_identity_holds() {
    let g = grid(0.0, PI, 2001);
    let joint = JointModel::new(
        PriorDensity::gaussian(g, PI / 2.0, 0.4).unwrap(),
        ConditionalModel::cos2(g).unwrap(),
    )
    .unwrap();
    let r = mutual_information(&joint);
    assert!((r.mi - (r.h_prior - r.h_posterior)).abs() < 1e-9);
    assert!(bayes_quadratic_cost(&joint) >= entropy_mse_floor(r.h_posterior));
}

#[test]
fn jeffreys_length_examples() {
    let g = grid(0.0, PI, 1001);
    assert!((jeffreys_length(&FisherProfile::constant(g, 1.0).unwrap(), 0..1001).unwrap() - PI).abs() < 1e-12);
    let g = grid(0.0, 2.0 * PI, 1001);
    let f = FisherProfile::constant(g, 49.0).unwrap();
    assert!((jeffreys_length(&f, 0..1001).unwrap() - 14.0 * PI).abs() < 1e-10);
    let hs = mi_bound_finite_support(&f, (0.0, 2.0 * PI)).unwrap();
    assert!((hs.expect_value() - (1.0 + 7.0 * PI).ln()).abs() < 1e-10);
}

#[test]
fn jeffreys_length_is_reparametrization_invariant() {
    // ψ = φ³ + φ on φ ∈ [0, π]; the cos² model in ψ has F_ψ = F_φ (dφ/dψ)².
    let psi_max = PI.powi(3) + PI;
    let inverse = |psi: f64| {
        let mut phi = psi.cbrt().min(psi);
        for _ in 0..60 {
            phi -= (phi.powi(3) + phi - psi) / (3.0 * phi * phi + 1.0);
        }
        phi
    };
    let g = grid(0.0, psi_max, 40001);
    let model = ConditionalModel::from_fn(g, 2, |psi| {
        let phi = inverse(psi);
        let dphi = 1.0 / (3.0 * phi * phi + 1.0);
        let (s, c) = (0.5 * phi).sin_cos();
        let d2phi = -6.0 * phi * dphi.powi(3);
        let dp = s * c * dphi;
        let d2p = 0.5 * phi.cos() * dphi * dphi + s * c * d2phi;
        OutcomeJet {
            p: vec![s * s, c * c],
            dp: vec![dp, -dp],
            d2p: Some(vec![d2p, -d2p]),
        }
    })
    .unwrap();
    let len = jeffreys_length(&fisher_information(&model), 0..g.len()).unwrap();
    assert!((len - PI).abs() < 1e-4, "{len}");
}

#[test]
fn entropy_examples() {
    let g = grid(0.0, 4.0, 401);
    let r = PriorDensity::rectangle(g, 2.0, 3.0).unwrap();
    assert!((prior_entropy(&r) - 3.0f64.ln()).abs() < 1e-12);
    let r = PriorDensity::rectangle(g, 2.0, 1.0).unwrap();
    assert!(prior_entropy(&r).abs() < 1e-12);
    assert!((entropy_mse_floor(0.0) - 1.0 / (2.0 * PI * E)).abs() < 1e-15);
    let sigma = 0.8f64;
    let h = 0.5 * (2.0 * PI * E * sigma * sigma).ln();
    assert!((entropy_mse_floor(h) - sigma * sigma).abs() < 1e-12);
}

#[test]
fn rectangle_case() {
    for d in [1.0, 2.0, PI] {
        let g = grid(0.0, d, 4001);
        let joint = JointModel::new(
            PriorDensity::rectangle(g, d / 2.0, d).unwrap(),
            ConditionalModel::constant(g, &[0.3, 0.7]).unwrap(),
        )
        .unwrap();
        let b = mse_bound_finite_support(&joint).unwrap().expect_value();
        assert!((b - d * d / (2.0 * PI * E)).abs() < 1e-9);
        let oracle = bayes_quadratic_cost(&joint);
        assert!((oracle - d * d / 12.0).abs() < 1e-6);
        assert!(b < oracle);
        assert!(efroimovich_mi_bound(&joint).is_flagged(ValidityFlag::PriorInformationDivergent));
        assert!(van_trees(&joint).is_flagged(ValidityFlag::PriorInformationDivergent));
        assert_eq!(prior_information(joint.prior()), PriorInformation::Divergent);
    }
}

#[test]
fn rectangle_with_unit_fisher() {
    let joint = cos2_uniform(2001);
    let b = mse_bound_finite_support(&joint).unwrap();
    let closed = TWO_OVER_PI_E / (2.0 / PI + 1.0).powi(2);
    assert!((b.expect_value() - closed).abs() < 1e-12);
    assert!((closed - 0.087_436_0).abs() < 1e-7);
    assert!((b.detail("closed_form").unwrap() - closed).abs() < 1e-12);
    assert!(bayes_quadratic_cost(&joint) > b.expect_value());
}

#[test]
fn gaussian_prior_examples() {
    let sigma = 0.5;
    let g = grid(-10.0 * sigma, 10.0 * sigma, 8001);
    let prior = || PriorDensity::gaussian(g, 0.0, sigma).unwrap();
    match prior_information(&prior()) {
        PriorInformation::Finite(p) => assert!((p - 1.0 / (sigma * sigma)).abs() < 1e-6),
        PriorInformation::Divergent => panic!("Gaussian prior information is finite"),
    }
    let none = JointModel::new(prior(), ConditionalModel::constant(g, &[1.0]).unwrap()).unwrap();
    assert!((van_trees(&none).expect_value() - sigma * sigma).abs() < 1e-9);
    assert!(efroimovich_mi_bound(&none).expect_value().abs() < 1e-6);
    assert!((bayes_quadratic_cost(&none) - sigma * sigma).abs() < 1e-9);
    assert!(mse_bound_general_prior(&none).unwrap().expect_value() <= sigma * sigma);
    assert!(mi_bound_general_prior(&none).unwrap().expect_value() >= 0.0);

    let m = 3.0;
    let f = m * m;
    let joint = JointModel::new(prior(), ConditionalModel::cos2_scaled(g, m).unwrap()).unwrap();
    assert!((van_trees(&joint).expect_value() - 1.0 / (f + 1.0 / (sigma * sigma))).abs() < 1e-9);
    let efro = efroimovich_mi_bound(&joint).expect_value();
    assert!((efro - 0.5 * (sigma * sigma * f + 1.0).ln()).abs() < 1e-6);
    let gp = mse_bound_general_prior(&joint).unwrap().expect_value();
    let pair = gaussian_prior_mse_bounds(f, sigma).unwrap();
    assert!(rel(gp, pair.exact.expect_value()) < 1e-6);
    assert!(gp >= pair.simplified.expect_value());
    let var = mi_bound_variational(&joint, &WeightFunction::from_prior(joint.prior())).unwrap();
    assert!((var.expect_value() - mi_bound_general_prior(&joint).unwrap().expect_value()).abs() < 1e-9);
}

#[test]
fn gaussian_pair_ratios() {
    for fs2 in [0.1, 1.0, 10.0, 100.0] {
        let sigma = 1.3;
        let f = fs2 / (sigma * sigma);
        let pair = gaussian_prior_mse_bounds(f, sigma).unwrap();
        let vt = 1.0 / (f + 1.0 / (sigma * sigma));
        assert!((vt / pair.simplified.expect_value() - PI * E / 2.0).abs() < 1e-9);
        let want_u = TRICOMI_REFERENCE.iter().find(|(z, _)| *z == fs2 / 2.0).unwrap().1;
        let want_ratio = (want_u / (fs2 / 2.0 + 0.5).sqrt()).powi(2);
        let ratio = pair.simplified.expect_value() / pair.exact.expect_value();
        assert!(rel(ratio, want_ratio) < 1e-10, "Fσ²={fs2}");
    }
    let zero = gaussian_prior_mse_bounds(0.0, 2.0).unwrap();
    assert!((zero.simplified.expect_value() - TWO_OVER_PI_E * 4.0).abs() < 1e-12);
}

#[test]
fn revealing_cells_give_log_k() {
    for k in [2usize, 4, 5] {
        let g = grid(0.0, 1.0, 2001);
        let joint = JointModel::new(
            PriorDensity::rectangle(g, 0.5, 1.0).unwrap(),
            ConditionalModel::revealing_cells(g, k).unwrap(),
        )
        .unwrap();
        assert!((mutual_information(&joint).mi - (k as f64).ln()).abs() < 1e-3);
    }
}

#[test]
fn repetition_examples() {
    let joint = cos2_uniform(1001);
    let mut last = 0.0;
    for n in 1..=8 {
        let mi = mutual_information(&repeat_model(&joint, n).unwrap()).mi;
        assert!(mi >= last - 1e-12, "N={n}");
        last = mi;
    }
    for n in [1usize, 2] {
        let exact = mutual_information(&repeat_model(&joint, n).unwrap());
        let ml = ml_estimator_oracle(&joint, n, 4096).unwrap();
        assert!(ml.mi <= exact.mi + 1e-12);
        assert!(ml.h_posterior >= exact.h_posterior - 1e-12);
    }
}

#[test]
fn quantum_cap_examples() {
    assert!((asymptotic_fi_cap(100.0, 0.5).unwrap().unwrap() - 100.0).abs() < 1e-12);
    assert!((asymptotic_fi_cap(100.0, 0.9).unwrap().unwrap() - 900.0).abs() < 1e-9);
    assert!((finite_n_fi_cap(100.0, 0.9).unwrap().unwrap() - 900.0 / 1.09).abs() < 1e-9);
    let a = mi_cap(100.0, 0.5, CapRegime::Asymptotic).unwrap().expect_value();
    assert!((a - (1.0 + 10.0 * PI).ln()).abs() < 1e-12);
    assert!((a - 3.4787).abs() < 1e-4);
    let f = mi_cap(100.0, 0.9, CapRegime::FiniteN).unwrap().expect_value();
    assert!((f - (1.0 + PI * (900.0f64 / 1.09).sqrt()).ln()).abs() < 1e-9);
    let near = mi_cap(50.0, 1.0 - 1e-9, CapRegime::FiniteN).unwrap().expect_value();
    assert!((near - (1.0 + 50.0 * PI).ln()).abs() < 1e-6);
}

#[test]
fn noon_carries_at_most_one_bit() {
    let g = grid(0.0, 2.0 * PI, 4001);
    let prior = || PriorDensity::rectangle(g, PI, 2.0 * PI).unwrap();
    for n in [1usize, 2, 4, 8, 16] {
        let model = noon_outcome_model(n, &Povm::sigma_x(2).unwrap(), g).unwrap();
        let mi = mutual_information(&JointModel::new(prior(), model).unwrap()).mi;
        assert!(mi <= LN_2 + 1e-6, "N={n}: {mi}");
        let q = qfi(&PhaseFamily::noon(n).unwrap(), 0.3).unwrap();
        assert!((q - (n * n) as f64).abs() < 1e-9);
    }
    let model = noon_outcome_model(1, &Povm::sigma_x(2).unwrap(), g).unwrap();
    let mi = mutual_information(&JointModel::new(prior(), model).unwrap()).mi;
    assert!((mi - COS2_UNIFORM_MI).abs() < 1e-6);
}

#[test]
fn fisher_information_adds_over_copies() {
    let config = mibound::random_models::RandomModelConfig {
        grid_points: 2001,
        max_outcomes: 4,
        ..Default::default()
    };
    for index in 0..6 {
        let model = mibound::random_models::generate(&config, 11, index).unwrap();
        let single = model.joint.conditional();
        let f1 = fisher_information(single);
        for copies in 1..=3 {
            let product = single.product(copies, 4096).unwrap();
            let fn_ = fisher_information(&product);
            for (a, b) in f1.values().iter().zip(fn_.values()) {
                assert!((copies as f64 * a - b).abs() <= 1e-9 * (1.0 + b), "copies={copies}");
            }
        }
        // product-rule second derivatives agree with differences of the first
        let product = single.product(2, 4096).unwrap();
        let h = product.grid().spacing();
        for x in 0..product.num_outcomes() {
            let d = product.derivative_row(x);
            for i in 1..d.len() - 1 {
                let d2 = product.second_derivative(x, i).unwrap();
                let fd = (d[i + 1] - d[i - 1]) / (2.0 * h);
                assert!(
                    (fd - d2).abs() < 1e-2 * (1.0 + d2.abs()),
                    "model {index} outcome {x} node {i}"
                );
            }
        }
    }
}
