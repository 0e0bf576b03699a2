//! Seeded random smooth models for property checks.
//!
//! Outcome probabilities are a softmax of random trigonometric polynomials
//! in `φ`, so first and second derivatives are analytic. Priors are drawn
//! from the built-in smooth families or a two-component Gaussian mixture.
//! Everything lives on `[-π, π]`.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::ParameterGrid;
use crate::stat_model::{ConditionalModel, JointModel, OutcomeJet, PriorDensity};
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 2001;
pub const MAX_OUTCOMES: usize = 8;
/// Probability floor mixed in by the adversarial generator.
pub const ADVERSARIAL_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomModelConfig {
    pub grid_points: usize,
    pub max_outcomes: usize,
    pub max_degree: usize,
    /// Sharp logits plus a `1e-9` probability floor.
    pub adversarial: bool,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            max_outcomes: MAX_OUTCOMES,
            max_degree: 3,
            adversarial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RandomPrior {
    Gaussian {
        mean: f64,
        sigma: f64,
    },
    RaisedCosine {
        center: f64,
        width: f64,
    },
    Plateau {
        center: f64,
        width: f64,
        ramp: f64,
    },
    Mixture {
        weight: f64,
        means: [f64; 2],
        sigmas: [f64; 2],
    },
}

/// Everything needed to rebuild a generated model.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomModelSpec {
    pub seed: u64,
    pub index: u64,
    pub grid_points: usize,
    pub prior: RandomPrior,
    /// `cos_coeffs[k][m]` multiplies `cos(mφ)` in the logit of outcome `k`.
    pub cos_coeffs: Vec<Vec<f64>>,
    pub sin_coeffs: Vec<Vec<f64>>,
    pub floor: f64,
}

impl fmt::Display for RandomModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "index = {}", self.index)?;
        writeln!(f, "grid_points = {}", self.grid_points)?;
        writeln!(f, "prior = {:?}", self.prior)?;
        writeln!(f, "floor = {:e}", self.floor)?;
        for (k, (a, b)) in self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate() {
            writeln!(f, "logit[{k}].cos = {a:?}")?;
            writeln!(f, "logit[{k}].sin = {b:?}")?;
        }
        Ok(())
    }
}

pub struct RandomModel {
    pub spec: RandomModelSpec,
    pub joint: JointModel,
}

fn model_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_prior(rng: &mut ChaCha8Rng, grid: &ParameterGrid) -> RandomPrior {
    let h = grid.spacing();
    let mid = (grid.len() - 1) / 2;
    // Node-aligned centre and widths keep compact-support edges on the grid.
    let on_grid = |offset: i64| grid.point((mid as i64 + offset) as usize);
    let span = (grid.len() / 5) as i64;
    match rng.random_range(0..4) {
        0 => RandomPrior::Gaussian {
            mean: rng.random_range(-0.8..0.8),
            sigma: rng.random_range(0.15..0.5),
        },
        1 => {
            let center = on_grid(rng.random_range(-span / 2..=span / 2));
            let width = 2.0 * h * rng.random_range(span / 4..=span) as f64;
            RandomPrior::RaisedCosine { center, width }
        }
        2 => {
            let center = on_grid(rng.random_range(-span / 2..=span / 2));
            // even ramp node counts put the flat-top joins on Simpson panel edges
            let ramp = 2.0 * h * rng.random_range(span / 16..=span / 4) as f64;
            let width = 2.0 * h * rng.random_range(span / 8..=span / 2) as f64;
            RandomPrior::Plateau { center, width, ramp }
        }
        _ => RandomPrior::Mixture {
            weight: rng.random_range(0.2..0.8),
            means: [rng.random_range(-0.8..0.0), rng.random_range(0.0..0.8)],
            sigmas: [rng.random_range(0.15..0.4), rng.random_range(0.15..0.4)],
        },
    }
}

fn build_prior(prior: &RandomPrior, grid: ParameterGrid) -> Result<PriorDensity> {
    match *prior {
        RandomPrior::Gaussian { mean, sigma } => PriorDensity::gaussian(grid, mean, sigma),
        RandomPrior::RaisedCosine { center, width } => PriorDensity::raised_cosine(grid, center, width),
        RandomPrior::Plateau { center, width, ramp } => PriorDensity::plateau(grid, center, width, ramp),
        RandomPrior::Mixture { weight, means, sigmas } => {
            let weights = [weight, 1.0 - weight];
            let mut p = vec![0.0; grid.len()];
            let mut dp = vec![0.0; grid.len()];
            let mut d2p = vec![0.0; grid.len()];
            for (i, x) in grid.nodes().enumerate() {
                for c in 0..2 {
                    let (m, s) = (means[c], sigmas[c]);
                    let z = (x - m) / s;
                    let g = weights[c] * (-0.5 * z * z).exp() / (s * (2.0 * PI).sqrt());
                    p[i] += g;
                    dp[i] += -g * z / s;
                    d2p[i] += g * (z * z - 1.0) / (s * s);
                }
            }
            let mass = crate::numerics::integrate(&p, &grid)?;
            for v in p.iter_mut().chain(dp.iter_mut()).chain(d2p.iter_mut()) {
                *v /= mass;
            }
            PriorDensity::tabulated_with_derivatives(grid, p, dp, Some(d2p))
        }
    }
}

/// Softmax of trigonometric logits with a floor, plus analytic derivatives.
pub fn softmax_jet(cos_coeffs: &[Vec<f64>], sin_coeffs: &[Vec<f64>], floor: f64, phi: f64) -> OutcomeJet {
    let k = cos_coeffs.len();
    let mut s = vec![0.0; k];
    let mut ds = vec![0.0; k];
    let mut d2s = vec![0.0; k];
    for x in 0..k {
        for (m, (&a, &b)) in cos_coeffs[x].iter().zip(&sin_coeffs[x]).enumerate() {
            let mf = m as f64;
            let (sn, cs) = (mf * phi).sin_cos();
            s[x] += a * cs + b * sn;
            ds[x] += mf * (b * cs - a * sn);
            d2s[x] -= mf * mf * (a * cs + b * sn);
        }
    }
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = e.iter().sum();
    let p: Vec<f64> = e.iter().map(|v| v / z).collect();
    let s1: f64 = p.iter().zip(&ds).map(|(p, d)| p * d).sum();
    let dp: Vec<f64> = (0..k).map(|x| p[x] * (ds[x] - s1)).collect();
    let ds1: f64 = (0..k).map(|x| dp[x] * ds[x] + p[x] * d2s[x]).sum();
    let d2p: Vec<f64> = (0..k).map(|x| dp[x] * (ds[x] - s1) + p[x] * (d2s[x] - ds1)).collect();
    let scale = 1.0 - k as f64 * floor;
    OutcomeJet {
        p: p.iter().map(|v| scale * v + floor).collect(),
        dp: dp.iter().map(|v| scale * v).collect(),
        d2p: Some(d2p.iter().map(|v| scale * v).collect()),
    }
}

/// Draws model number `index` of the stream identified by `seed`.
pub fn generate(config: &RandomModelConfig, seed: u64, index: u64) -> Result<RandomModel> {
    if config.max_outcomes < 2 || config.max_outcomes > MAX_OUTCOMES {
        return Err(Error::InvalidArgument(format!(
            "max_outcomes must lie in [2, {MAX_OUTCOMES}], got {}",
            config.max_outcomes
        )));
    }
    if config.max_degree == 0 {
        return Err(Error::InvalidArgument("max_degree must be ≥ 1".into()));
    }
    let grid = ParameterGrid::new(-PI, PI, config.grid_points)?;
    if grid.len() < 101 {
        return Err(Error::InvalidArgument(
            "random models need at least 101 grid points".into(),
        ));
    }
    let mut rng = model_rng(seed, index);
    let prior = draw_prior(&mut rng, &grid);
    let outcomes = rng.random_range(2..=config.max_outcomes);
    let degree = rng.random_range(1..=config.max_degree);
    let amplitude = if config.adversarial {
        rng.random_range(10.0..40.0)
    } else {
        rng.random_range(0.3..3.0)
    };
    // offsets stay O(1) so no outcome is switched off across the whole grid
    let mut draw = |m: usize| -> f64 {
        let g: f64 = rng.sample(StandardNormal);
        if m == 0 {
            g
        } else {
            amplitude * g / m as f64
        }
    };
    let mut cos_coeffs = vec![vec![0.0; degree + 1]; outcomes];
    let mut sin_coeffs = vec![vec![0.0; degree + 1]; outcomes];
    for x in 0..outcomes {
        for m in 0..=degree {
            cos_coeffs[x][m] = draw(m);
            if m > 0 {
                sin_coeffs[x][m] = draw(m);
            }
        }
    }
    let floor = if config.adversarial { ADVERSARIAL_FLOOR } else { 0.0 };
    let spec = RandomModelSpec {
        seed,
        index,
        grid_points: config.grid_points,
        prior,
        cos_coeffs,
        sin_coeffs,
        floor,
    };
    let joint = build(&spec)?;
    Ok(RandomModel { spec, joint })
}

/// Rebuilds the joint model described by a spec.
pub fn build(spec: &RandomModelSpec) -> Result<JointModel> {
    let grid = ParameterGrid::new(-PI, PI, spec.grid_points)?;
    let prior = build_prior(&spec.prior, grid)?;
    let outcomes = spec.cos_coeffs.len();
    let conditional = ConditionalModel::from_fn(grid, outcomes, |phi| {
        softmax_jet(&spec.cos_coeffs, &spec.sin_coeffs, spec.floor, phi)
    })?;
    JointModel::new(prior, conditional)
}
