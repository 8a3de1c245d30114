//! Numerical toolkit for entropy power inequalities.
//!
//! Differential entropy and Fisher information on grids, Gaussian heat-flow
//! identities, EPI deficits, log-concave integer distributions, isoperimetric
//! constants and the stability bounds built from them.

pub mod density;
pub mod discrete;
pub mod error;
pub mod functionals;
pub mod heat;
pub mod io;
pub mod isoperimetry;
pub mod numeric;
pub mod stability;

pub use density::{
    convolve, levy_distance, moment, render, AnalyticDensity, DensityRef, DistributionFunction,
    Gaussian, GridDensity, LevyGrid,
};
pub use discrete::{IntegerPmf, PmfFamily};
pub use error::{Error, Result};
pub use functionals::{
    differential_entropy, discrete_entropy, discrete_relative_entropy, fisher_information,
    relative_entropy, tao_deficit, FunctionalEstimate,
};
pub use heat::{
    debruijn_residual, debruijn_zero_limit, deficit_monotonicity, epi_deficit, gaussian_smooth,
    heat_equation_residual, mix_density, perturb, submodularity_gap, weak_stability_demo,
    DeficitReport, HeatTrajectory,
};
pub use isoperimetry::{
    isoperimetric_constant, isoperimetry_report, rayleigh_lower_bound, smooth_with_uniform,
    verify_prop10, IsoperimetryReport, PiecewiseConstantDensity, Prop10Check, TestFunction,
};
pub use stability::{
    continuous_stability_report, kl_to_discretized_gaussian, theorem9_report,
    ContinuousStabilityReport, DiscreteStabilityReport,
};
