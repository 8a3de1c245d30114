//! One-dimensional densities: grids, closed-form families, convolution and the Lévy metric.

mod analytic;
mod convolve;
mod grid;
mod levy;

pub use analytic::{
    render, render_auto, sample, AnalyticDensity, Gaussian, RENDER_MASS_TOL, RENDER_MASS_TOL_HEAVY,
};
pub use convolve::{convolve, convolve_sequences, convolve_with, ConvolutionMethod};
pub use grid::{GridDensity, MIN_GRID_POINTS, NORMALIZATION_TOL};
pub use levy::{levy_distance, DistributionFunction, LevyGrid};

/// Either representation, for operations that accept both.
#[derive(Debug, Clone, Copy)]
pub enum DensityRef<'a> {
    Grid(&'a GridDensity),
    Analytic(&'a AnalyticDensity),
}

impl<'a> From<&'a GridDensity> for DensityRef<'a> {
    fn from(g: &'a GridDensity) -> Self {
        DensityRef::Grid(g)
    }
}

impl<'a> From<&'a AnalyticDensity> for DensityRef<'a> {
    fn from(d: &'a AnalyticDensity) -> Self {
        DensityRef::Analytic(d)
    }
}

/// `E[X^k]` or `E|X|^k`; exact for analytic families, trapezoid for grids.
pub fn moment<'a>(
    density: impl Into<DensityRef<'a>>,
    k: u32,
    absolute: bool,
) -> crate::Result<f64> {
    match density.into() {
        DensityRef::Grid(g) => g.moment(k, absolute),
        DensityRef::Analytic(d) => d.moment(k, absolute),
    }
}
