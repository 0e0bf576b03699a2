//! Mutual-information bounds expressed through Fisher information.
//!
//! The crate evaluates upper bounds on the mutual information `I(x, φ)`
//! between a measurement outcome `x` and a scalar parameter `φ`, the Bayesian
//! mean-square-error bounds that follow from them, and the caps they imply
//! for noisy quantum phase estimation. Every bound comes with a brute-force
//! oracle ([`mi_oracle`]) so it can be checked on concrete models.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`numerics`] | grids, Simpson quadrature, finite differences, Tricomi `U` |
//! | [`stat_model`] | priors, conditional outcome models, Fisher information, entropies |
//! | [`bounds`] | MI upper bounds and MSE lower bounds as [`bounds::BoundReport`]s |
//! | [`mi_oracle`] | exact MI, posterior entropy, Bayes cost, MLE Monte-Carlo study |
//! | [`quantum_metrology`] | Kraus channels, QFI, noisy Fisher caps, HS→SQL sweep |
//! | [`random_models`] | seeded smooth random models for property checks |
//!
//! All information quantities are in nats.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod mi_oracle;
pub mod numerics;
pub mod quantum_metrology;
pub mod random_models;
pub mod stat_model;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index} in {context}")]
    NonFinite { index: usize, context: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("outcome budget exceeded: {required} outcomes > budget {budget}; use the Monte-Carlo path instead")]
    BudgetExceeded { required: u128, budget: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub use bounds::{BoundReport, Direction, Units, ValidityFlag};
pub use numerics::ParameterGrid;
pub use stat_model::{ConditionalModel, FisherProfile, JointModel, PriorDensity, PriorKind};
