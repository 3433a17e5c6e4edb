//! Checks of duality relations: exact residuals, Monte Carlo comparisons,
//! the stationary-measure relation and the characterization of
//! first single-site self-duality functions.

mod characterize;
mod continuum;
mod discrete;
mod scaling;
mod stationary;
mod stochastic;

pub use characterize::{
    characterize_continuum_first_dual, characterize_continuum_first_dual_with, characterize_selfduality,
    has_affine_form, Characterization, ContinuumMode, SelfDualityTables,
};
pub use continuum::{check_f01_identities, selfduality_residual_continuum, ContinuumFamily};
pub use discrete::{
    duality_residual_discrete, duality_residual_mixed, mid_rows, sweep_discrete, SweepReport,
};
pub use scaling::{scaling_limit_check, ScalingReport, ScalingRow};
pub use stationary::{stationary_relation_check, theta_of, StationaryReport};
pub use stochastic::{sector_expectation, stochastic_duality_check, StochasticReport};

use thiserror::Error;

use crate::duality::DualityError;
use crate::linalg;
use crate::measures::MeasureError;
use crate::systems::SystemError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integer overflow in exact sweep; use the rational route")]
    Overflow,
    #[error(transparent)]
    Duality(#[from] DualityError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    System(#[from] SystemError),
}

pub(crate) use linalg::nullspace;
