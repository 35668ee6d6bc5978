//! Closed-form and semi-closed-form interference, success probability and
//! throughput evaluation.

mod kernel;
mod laplace;
mod model;
mod success;

pub use kernel::{bracket_derivative, InterferenceKernel, MassTable};
pub use laplace::{
    activity_factor, bracket, laplace_discrete_power, laplace_single_cell, mean_interference,
    LaplaceEvaluation,
};
pub use model::{NetworkModel, QuadratureSettings, ZoneSpan};
pub(crate) use model::NEGLIGIBLE_SNR_EXPONENT;
pub use success::{DutyRule, Reception, SuccessBreakdown, ZoneAverager, ZoneOutcome};
