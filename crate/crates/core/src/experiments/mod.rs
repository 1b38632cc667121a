//! Downstream applications: Wasserstein contraction along the heat flow and
//! total-variation estimates for transport projections and regularized
//! minimizers.

mod bv;
mod heat;

pub use bv::{
    bv_estimate_report, bv_norm, regularized_energy, regularized_min, wasserstein_projection, BvMode, BvReport,
    Penalty, Projection, RegularizedMin,
};
pub use heat::{contraction_experiment, heat_step, heat_step_clamped, ContractionCurve, HeatOperator};
