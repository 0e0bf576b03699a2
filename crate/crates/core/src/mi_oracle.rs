//! Brute-force ground truth for the bounds: mutual information, posterior
//! entropy and the minimal Bayes quadratic cost by quadrature, plus a seeded
//! Monte-Carlo study of the maximum-likelihood estimator.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{average_fisher, prior_information, PriorInformation};
use crate::numerics::{integrate_span, span_weights};
use crate::stat_model::{marginal_outcome, prior_entropy, ConditionalModel, JointModel};
use crate::{Error, Result};

/// Default cap on `Kᴺ` for [`repeat_model`].
pub const DEFAULT_OUTCOME_BUDGET: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    PosteriorMean,
    MaximumLikelihood,
}

/// Exact information quantities of a joint model, in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub mi: f64,
    pub h_prior: f64,
    /// `H(φ|x)`.
    pub h_posterior: f64,
    /// Bayes mean-square error of [`OracleResult::estimator`].
    pub bayes_mse: f64,
    pub estimator: Estimator,
}

/// `I(x, φ) = Σₓ ∫ p(x,φ) ln[p(x,φ)/(p̄ₓ p(φ))] dφ` with `0 ln 0 = 0`.
///
/// `H(φ|x)` is integrated independently from `ln p(φ|x)`, so the identity
/// `mi = h_prior − h_posterior` is a genuine consistency check.
pub fn mutual_information(joint: &JointModel) -> OracleResult {
    let grid = joint.grid();
    let support = joint.prior().support();
    let pbar = marginal_outcome(joint);
    let n = grid.len();
    let mut mi_integrand = vec![0.0; n];
    let mut hp_integrand = vec![0.0; n];
    for (x, &px) in pbar.iter().enumerate() {
        if px <= 0.0 {
            continue;
        }
        for i in support.clone() {
            let pj = joint.joint(x, i);
            if pj > 0.0 {
                let cond = joint.conditional().prob(x, i);
                mi_integrand[i] += pj * (cond / px).ln();
                hp_integrand[i] -= pj * (pj / px).ln();
            }
        }
    }
    let mi = integrate_span(&mi_integrand, grid, support.clone()).expect("finite integrand");
    let h_posterior = integrate_span(&hp_integrand, grid, support).expect("finite integrand");
    OracleResult {
        mi,
        h_prior: prior_entropy(joint.prior()),
        h_posterior,
        bayes_mse: bayes_quadratic_cost(joint),
        estimator: Estimator::PosteriorMean,
    }
}

/// Minimal Bayes MSE `E[Var(φ|x)]`, attained by the posterior mean.
pub fn bayes_quadratic_cost(joint: &JointModel) -> f64 {
    let grid = joint.grid();
    let support = joint.prior().support();
    let w = span_weights(support.len(), grid.spacing());
    let mut total = 0.0;
    for x in 0..joint.conditional().num_outcomes() {
        let mut mass = 0.0;
        let mut first = 0.0;
        for (k, i) in support.clone().enumerate() {
            let pj = joint.joint(x, i) * w[k];
            mass += pj;
            first += pj * grid.point(i);
        }
        if mass <= 0.0 {
            continue;
        }
        let mean = first / mass;
        total += support
            .clone()
            .enumerate()
            .map(|(k, i)| joint.joint(x, i) * w[k] * (grid.point(i) - mean).powi(2))
            .sum::<f64>();
    }
    total
}

/// `N` independent outcomes per parameter draw, same prior.
pub fn repeat_model(joint: &JointModel, copies: usize) -> Result<JointModel> {
    repeat_model_with_budget(joint, copies, DEFAULT_OUTCOME_BUDGET)
}

pub fn repeat_model_with_budget(joint: &JointModel, copies: usize, budget: usize) -> Result<JointModel> {
    let product = joint.conditional().product(copies, budget)?;
    JointModel::new(joint.prior().clone(), product)
}

/// Grid index maximizing `Σₓ cₓ ln p(x|φ)`, ties to the smallest index.
fn ml_index(log_table: &[Vec<f64>], counts: &[u32]) -> usize {
    let nodes = log_table[0].len();
    let mut best = 0;
    let mut best_ll = f64::NEG_INFINITY;
    for j in 0..nodes {
        let mut ll = 0.0;
        for (x, &c) in counts.iter().enumerate() {
            if c > 0 {
                ll += c as f64 * log_table[x][j];
            }
        }
        if ll > best_ll {
            best_ll = ll;
            best = j;
        }
    }
    best
}

fn log_table(model: &ConditionalModel) -> Vec<Vec<f64>> {
    (0..model.num_outcomes())
        .map(|x| model.prob_row(x).iter().map(|p| p.ln()).collect())
        .collect()
}

/// Exact information carried by the maximum-likelihood estimate from
/// `copies` samples: the outcome strings are merged by their ML value and the
/// oracle is run on the merged model.
pub fn ml_estimator_oracle(joint: &JointModel, copies: usize, budget: usize) -> Result<OracleResult> {
    let repeated = repeat_model_with_budget(joint, copies, budget)?;
    let model = repeated.conditional();
    let logs = log_table(model);
    let mut labels: HashMap<usize, usize> = HashMap::new();
    let mut estimates = Vec::new();
    let mut groups = Vec::with_capacity(model.num_outcomes());
    for x in 0..model.num_outcomes() {
        let mut counts = vec![0u32; model.num_outcomes()];
        counts[x] = 1;
        let j = ml_index(&logs, &counts);
        let label = *labels.entry(j).or_insert_with(|| {
            estimates.push(j);
            estimates.len() - 1
        });
        groups.push(label);
    }
    let merged = JointModel::new(joint.prior().clone(), model.coarsen(&groups)?)?;
    let mut result = mutual_information(&merged);
    // MSE of the plug-in estimate itself
    let grid = joint.grid();
    let support = joint.prior().support();
    let w = span_weights(support.len(), grid.spacing());
    let mut mse = 0.0;
    for (x, &g) in groups.iter().enumerate() {
        let estimate = grid.point(estimates[g]);
        for (k, i) in support.clone().enumerate() {
            mse += repeated.joint(x, i) * w[k] * (grid.point(i) - estimate).powi(2);
        }
    }
    result.bayes_mse = mse;
    result.estimator = Estimator::MaximumLikelihood;
    Ok(result)
}

/// One sample size of [`mle_convergence_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleStudyRow {
    pub samples: usize,
    pub trials: usize,
    /// Plug-in estimate of `H(φ|φ̃_ML)`.
    pub h_conditional: f64,
    /// `−½ ln[N ∫F₁p/(2πe)]`.
    pub asymptote: f64,
    pub gap: f64,
    /// Distinct ML values observed.
    pub estimate_values: usize,
    /// Histogram too sparse for a trustworthy plug-in estimate.
    pub sparse_histogram: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleStudy {
    pub rows: Vec<MleStudyRow>,
    pub seed: u64,
}

impl MleStudy {
    pub fn any_warning(&self) -> bool {
        self.rows.iter().any(|r| r.sparse_histogram)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|c| *c <= u).min(cdf.len() - 1)
}

/// Plug-in entropy of node indices (in parameter units) for one ML group.
///
/// Bins are whole multiples of the grid spacing with the Freedman–Diaconis
/// width `2·IQR·n^{−1/3}`, never narrower than one spacing.
fn group_entropy(indices: &mut [usize], spacing: f64) -> (f64, f64) {
    indices.sort_unstable();
    let n = indices.len();
    let q = |f: f64| indices[((n - 1) as f64 * f).round() as usize] as f64;
    let iqr = q(0.75) - q(0.25);
    let width = ((2.0 * iqr * (n as f64).powf(-1.0 / 3.0)).round() as usize).max(1);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in indices.iter() {
        *counts.entry(i / width).or_default() += 1;
    }
    let nf = n as f64;
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / nf;
            -p * p.ln()
        })
        .sum();
    let occupancy = nf / counts.len() as f64;
    (h + (width as f64 * spacing).ln(), occupancy)
}

/// Monte-Carlo study of `H(φ|φ̃_ML)` against its asymptotic value.
///
/// For each `N`: draw `φ` from the prior (node masses `p(φᵢ)·h`), draw `N`
/// outcomes, take the ML estimate on the grid, and estimate the conditional
/// entropy by per-estimate histograms. Each trial owns its random stream, so
/// results depend only on `seed`, not on thread scheduling.
pub fn mle_convergence_study(joint: &JointModel, sample_sizes: &[usize], trials: usize, seed: u64) -> Result<MleStudy> {
    if trials == 0 || sample_sizes.is_empty() || sample_sizes.contains(&0) {
        return Err(Error::InvalidArgument(
            "need at least one trial and positive sample sizes".into(),
        ));
    }
    if let PriorInformation::Divergent = prior_information(joint.prior()) {
        return Err(Error::InvalidArgument(
            "the MLE study needs a smooth prior with finite prior information".into(),
        ));
    }
    let avg_fisher = average_fisher(joint)
        .filter(|f| *f > 0.0)
        .ok_or_else(|| Error::InvalidArgument("average Fisher information must be finite and positive".into()))?;

    let grid = *joint.grid();
    let model = joint.conditional();
    let k = model.num_outcomes();
    let support = joint.prior().support();
    let density = joint.prior().density();

    let mut cdf = Vec::with_capacity(support.len());
    let mut acc = 0.0;
    for (pos, i) in support.clone().enumerate() {
        let end = pos == 0 || pos + 1 == support.len();
        acc += density[i] * if end { 0.5 } else { 1.0 };
        cdf.push(acc);
    }
    for c in cdf.iter_mut() {
        *c /= acc;
    }
    let outcome_cdfs: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| {
            let mut a = 0.0;
            (0..k)
                .map(|x| {
                    a += model.prob(x, i);
                    a
                })
                .collect()
        })
        .collect();
    let logs = log_table(model);

    let mut rows = Vec::with_capacity(sample_sizes.len());
    for &n in sample_sizes {
        let stream_seed = splitmix(seed ^ splitmix(n as u64));
        let draws: Vec<(usize, Vec<u32>)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
                rng.set_stream(t as u64);
                let node = support.start + sample_index(&cdf, rng.random::<f64>());
                let mut counts = vec![0u32; k];
                for _ in 0..n {
                    let u: f64 = rng.random();
                    counts[sample_index(&outcome_cdfs[node], u)] += 1;
                }
                (node, counts)
            })
            .collect();

        let mut distinct: Vec<Vec<u32>> = draws.iter().map(|(_, c)| c.clone()).collect();
        distinct.sort_unstable();
        distinct.dedup();
        let estimates: HashMap<Vec<u32>, usize> = distinct
            .into_par_iter()
            .map(|c| {
                let j = ml_index(&logs, &c);
                (c, j)
            })
            .collect();

        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for (node, counts) in &draws {
            groups.entry(estimates[counts]).or_default().push(*node);
        }
        let mut keys: Vec<usize> = groups.keys().copied().collect();
        keys.sort_unstable();
        let mut h = 0.0;
        let mut occupancy = 0.0;
        for key in &keys {
            let members = groups.get_mut(key).expect("key present");
            let weight = members.len() as f64 / trials as f64;
            let (hg, occ) = group_entropy(members, grid.spacing());
            h += weight * hg;
            occupancy += weight * occ;
        }
        let asymptote = -0.5 * (n as f64 * avg_fisher / (2.0 * PI * E)).ln();
        rows.push(MleStudyRow {
            samples: n,
            trials,
            h_conditional: h,
            asymptote,
            gap: (h - asymptote).abs(),
            estimate_values: keys.len(),
            sparse_histogram: occupancy < 3.0,
        });
    }
    Ok(MleStudy { rows, seed })
}
