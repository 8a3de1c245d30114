//! Differential entropy, Fisher information and relative entropy, on grids and
//! in closed form; discrete entropy and relative entropy for pmfs.

use serde::{Deserialize, Serialize};

use crate::density::{render_auto, AnalyticDensity, DensityRef, Gaussian, GridDensity};
use crate::discrete::{self_convolve, IntegerPmf};
use crate::error::{Error, Result};
use crate::io::f64_17;
use crate::numeric::{kl_integrand, neg_xlogx, trapezoid, trapezoid_map, CompensatedSum};

/// Grid density values at or below this are treated as zero by the Fisher integrand.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Largest trapezoid mass deviation accepted by the functionals.
pub const MASS_TOL: f64 = 1e-6;
/// Jump test: a step of more than this many `dx * max f` between neighbours.
pub const JUMP_FACTOR: f64 = 10.0;
/// Points used when a mixture without closed form has to be rendered.
pub const MIXTURE_RENDER_POINTS: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateWarning {
    /// Neighbouring samples differ by more than `10 dx max f`; the density looks
    /// discontinuous and its Fisher information should be read as infinite.
    NonAbsolutelyContinuous {
        #[serde(with = "f64_17")]
        x: f64,
    },
    /// The density at a window edge is not negligible relative to its peak.
    EdgeMass {
        #[serde(with = "f64_17")]
        relative: f64,
    },
}

/// A functional value together with its error diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEstimate {
    #[serde(with = "f64_17")]
    pub value: f64,
    /// `|estimate on n points - estimate on every second point|`.
    #[serde(with = "f64_17")]
    pub refinement_gap: f64,
    #[serde(with = "f64_17")]
    pub tail_mass_dropped: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<EstimateWarning>,
}

impl FunctionalEstimate {
    pub fn exact(value: f64) -> Self {
        FunctionalEstimate {
            value,
            refinement_gap: 0.0,
            tail_mass_dropped: 0.0,
            warnings: Vec::new(),
        }
    }

    pub fn has_jump_warning(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, EstimateWarning::NonAbsolutelyContinuous { .. }))
    }
}

fn check_mass(g: &GridDensity) -> Result<()> {
    let m = g.mass();
    if (m - 1.0).abs() > MASS_TOL {
        return Err(Error::NotNormalized(m));
    }
    Ok(())
}

fn edge_warning(g: &GridDensity) -> Option<EstimateWarning> {
    let v = g.values();
    let peak = g.max_value();
    let edge = v[0].max(v[v.len() - 1]);
    (edge > 1e-8 * peak).then(|| EstimateWarning::EdgeMass {
        relative: edge / peak,
    })
}

fn render_mixture(d: &AnalyticDensity) -> Result<GridDensity> {
    render_auto(d, 1e-14, 0.0, MIXTURE_RENDER_POINTS)
}

pub(crate) fn entropy_values(values: &[f64], step: f64) -> f64 {
    trapezoid_map(values, step, |_, v| neg_xlogx(v))
}

fn grid_entropy(g: &GridDensity) -> Result<FunctionalEstimate> {
    check_mass(g)?;
    let value = entropy_values(g.values(), g.grid_step());
    let coarse = entropy_values(&g.coarse_samples(), 2.0 * g.grid_step());
    Ok(FunctionalEstimate {
        value,
        refinement_gap: (value - coarse).abs(),
        tail_mass_dropped: g.tail_mass(),
        warnings: edge_warning(g).into_iter().collect(),
    })
}

/// `-int f ln f` in nats, with `0 ln 0 = 0`.
pub fn differential_entropy<'a>(density: impl Into<DensityRef<'a>>) -> Result<FunctionalEstimate> {
    match density.into() {
        DensityRef::Grid(g) => grid_entropy(g),
        DensityRef::Analytic(d) => {
            d.validate()?;
            match d.entropy() {
                Some(h) => Ok(FunctionalEstimate::exact(h)),
                None => grid_entropy(&render_mixture(d)?),
            }
        }
    }
}

/// Derivative estimate at every sample: 4th-order central differences in the
/// interior, 2nd-order central next to the edges, 2nd-order one-sided at the edges.
pub(crate) fn derivative(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    let f = values;
    let mut d = vec![0.0; n];
    if n < 5 {
        return d;
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * step);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * step);
    d[1] = (f[2] - f[0]) / (2.0 * step);
    d[n - 2] = (f[n - 1] - f[n - 3]) / (2.0 * step);
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * step);
    }
    d
}

pub(crate) fn fisher_values(values: &[f64], step: f64) -> f64 {
    let d = derivative(values, step);
    trapezoid_map(values, step, |i, v| {
        if v > DENSITY_FLOOR {
            d[i] * d[i] / v
        } else {
            0.0
        }
    })
}

fn first_jump(values: &[f64], step: f64) -> Option<usize> {
    let peak = values.iter().copied().fold(0.0, f64::max);
    let limit = JUMP_FACTOR * step * peak;
    values.windows(2).position(|w| (w[1] - w[0]).abs() > limit)
}

fn grid_fisher(g: &GridDensity) -> Result<FunctionalEstimate> {
    check_mass(g)?;
    let (v, h) = (g.values(), g.grid_step());
    let value = fisher_values(v, h);
    let coarse = fisher_values(&g.coarse_samples(), 2.0 * h);
    let mut warnings: Vec<EstimateWarning> = edge_warning(g).into_iter().collect();
    if let Some(i) = first_jump(v, h) {
        log::warn!(
            "density jumps near x = {}; Fisher information is infinite",
            g.x(i)
        );
        warnings.push(EstimateWarning::NonAbsolutelyContinuous { x: g.x(i) });
    }
    Ok(FunctionalEstimate {
        value,
        refinement_gap: (value - coarse).abs(),
        tail_mass_dropped: g.tail_mass(),
        warnings,
    })
}

/// `int (f')^2 / f`.
///
/// On grids a detected jump adds a `NonAbsolutelyContinuous` warning; the
/// finite grid value is still returned and grows without bound under refinement.
/// Closed forms for densities with jumps return `+inf` with the same warning.
pub fn fisher_information<'a>(density: impl Into<DensityRef<'a>>) -> Result<FunctionalEstimate> {
    match density.into() {
        DensityRef::Grid(g) => grid_fisher(g),
        DensityRef::Analytic(d) => {
            d.validate()?;
            match d.fisher() {
                Some(i) if i.is_infinite() => {
                    let x = d.jump_points().first().copied().unwrap_or(f64::NAN);
                    Ok(FunctionalEstimate {
                        warnings: vec![EstimateWarning::NonAbsolutelyContinuous { x }],
                        ..FunctionalEstimate::exact(i)
                    })
                }
                Some(i) => Ok(FunctionalEstimate::exact(i)),
                None => grid_fisher(&render_mixture(d)?),
            }
        }
    }
}

fn bregman_sum(f: &[f64], g: &[f64], step: f64) -> f64 {
    let n = f.len();
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc.add(w * kl_integrand(f[i], g[i]));
    }
    acc.value() * step
}

fn kl_from_parts(f: &[f64], g: &[f64], step: f64) -> f64 {
    let d = bregman_sum(f, g, step) + trapezoid(f, step) - trapezoid(g, step);
    if d.is_nan() {
        return f64::INFINITY;
    }
    // pointwise terms are nonnegative; only mass round-off can go below zero
    if d < 0.0 && d > -1e-9 {
        0.0
    } else {
        d
    }
}

/// `D(f || g) = int f ln(f / g)` on a common grid; `+inf` if `g` vanishes where `f` does not.
pub fn relative_entropy(f: &GridDensity, g: &GridDensity) -> Result<FunctionalEstimate> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch(format!(
            "relative entropy needs a common grid: ({}, {}, {}) vs ({}, {}, {})",
            f.grid_start(),
            f.grid_step(),
            f.len(),
            g.grid_start(),
            g.grid_step(),
            g.len()
        )));
    }
    check_mass(f)?;
    check_mass(g)?;
    let h = f.grid_step();
    let value = kl_from_parts(f.values(), g.values(), h);
    let coarse = kl_from_parts(&f.coarse_samples(), &g.coarse_samples(), 2.0 * h);
    Ok(FunctionalEstimate {
        value,
        refinement_gap: if value.is_finite() {
            (value - coarse).abs()
        } else {
            0.0
        },
        tail_mass_dropped: f.tail_mass().max(g.tail_mass()),
        warnings: Vec::new(),
    })
}

/// `D(f || N(mean f, var f))`, with the Gaussian sampled exactly on `f`'s grid.
pub fn kl_to_matched_gaussian(f: &GridDensity) -> Result<FunctionalEstimate> {
    check_mass(f)?;
    let gauss = Gaussian::new(f.mean(), f.variance());
    let phi: Vec<f64> = (0..f.len()).map(|i| gauss.pdf(f.x(i))).collect();
    let h = f.grid_step();
    let value = kl_from_parts(f.values(), &phi, h);
    let coarse_phi: Vec<f64> = phi.iter().step_by(2).copied().collect();
    let coarse = kl_from_parts(&f.coarse_samples(), &coarse_phi, 2.0 * h);
    Ok(FunctionalEstimate {
        value,
        refinement_gap: (value - coarse).abs(),
        tail_mass_dropped: f.tail_mass(),
        warnings: Vec::new(),
    })
}

/// Shannon entropy `-sum p ln p` in nats.
pub fn discrete_entropy(p: &IntegerPmf) -> f64 {
    let mut acc = CompensatedSum::new();
    p.probs().iter().for_each(|&x| acc.add(neg_xlogx(x)));
    acc.value()
}

/// `sum p ln(p / q)`; `+inf` if `q` vanishes where `p` does not.
pub fn discrete_relative_entropy(p: &IntegerPmf, q: &IntegerPmf) -> f64 {
    let lo = p.k_min().min(q.k_min());
    let hi = p.k_max().max(q.k_max());
    let mut acc = CompensatedSum::new();
    for k in lo..=hi {
        let t = kl_integrand(p.prob(k), q.prob(k));
        if t.is_infinite() {
            return f64::INFINITY;
        }
        acc.add(t);
    }
    // sum p - sum q over the union, both 1 up to rounding
    let mut mass = CompensatedSum::new();
    p.probs().iter().for_each(|&x| mass.add(x));
    q.probs().iter().for_each(|&x| mass.add(-x));
    (acc.value() + mass.value()).max(0.0)
}

/// `H(X1 + X2) - H(X1) - ln(2)/2` for i.i.d. `X1, X2 ~ p`.
pub fn tao_deficit(p: &IntegerPmf) -> f64 {
    discrete_entropy(&self_convolve(p)) - discrete_entropy(p) - 0.5 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::render;
    use crate::discrete::uniform_int;
    use std::f64::consts::{E, PI};

    #[test]
    fn closed_forms() {
        let g = AnalyticDensity::gaussian(0.0, 1.0).unwrap();
        assert_eq!(
            differential_entropy(&g).unwrap().value,
            0.5 * (2.0 * PI * E).ln()
        );
        let c = AnalyticDensity::cauchy(0.0, 1.0).unwrap();
        assert!((differential_entropy(&c).unwrap().value - 2.531_024_246_969_291).abs() < 1e-14);
        assert_eq!(fisher_information(&c).unwrap().value, 0.5);
        let u = AnalyticDensity::uniform(0.0, 1.0).unwrap();
        let iu = fisher_information(&u).unwrap();
        assert!(iu.value.is_infinite() && iu.has_jump_warning());
    }

    #[test]
    fn gaussian_grid_entropy_and_fisher() {
        let d = AnalyticDensity::gaussian(0.0, 2.0).unwrap();
        let g = render(&d, (-16.0, 16.0), 4097).unwrap();
        let h = differential_entropy(&g).unwrap();
        assert!((h.value - d.entropy().unwrap()).abs() < 1e-10);
        let i = fisher_information(&g).unwrap();
        assert!((i.value - 0.5).abs() < 1e-8, "{}", i.value);
        assert!(!i.has_jump_warning());
    }

    #[test]
    fn uniform_grid_flags_jump() {
        let u = AnalyticDensity::uniform(0.0, 1.0).unwrap();
        let g = render(&u, (-1.0, 2.0), 3001).unwrap();
        assert!(fisher_information(&g).unwrap().has_jump_warning());
    }

    #[test]
    fn relative_entropy_of_gaussians() {
        let a = render(
            &AnalyticDensity::gaussian(0.0, 1.0).unwrap(),
            (-20.0, 20.0),
            8001,
        )
        .unwrap();
        let b = render(
            &AnalyticDensity::gaussian(0.0, 2.0).unwrap(),
            (-20.0, 20.0),
            8001,
        )
        .unwrap();
        let d = relative_entropy(&a, &b).unwrap();
        assert!(
            (d.value - (0.5 * 2f64.ln() - 0.25)).abs() < 1e-10,
            "{}",
            d.value - (0.5 * 2f64.ln() - 0.25)
        );
        assert_eq!(relative_entropy(&a, &a).unwrap().value, 0.0);
        assert!(kl_to_matched_gaussian(&a).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn support_violation_is_infinite() {
        let f = GridDensity::new(0.0, 1.0, vec![1.0; 9]).unwrap();
        let mut v = vec![1.0; 9];
        v[4] = 0.0;
        let g = GridDensity::new(0.0, 1.0, v).unwrap();
        assert!(relative_entropy(&f, &g).unwrap().value.is_infinite());
        assert!(matches!(
            relative_entropy(&f, &f.shifted(0.5)),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn discrete_values() {
        let two = uniform_int(0, 1).unwrap();
        assert!((discrete_entropy(&two) - 2f64.ln()).abs() < 1e-16);
        let pm = IntegerPmf::point_mass(0);
        assert_eq!(discrete_entropy(&pm), 0.0);
        assert!((discrete_relative_entropy(&pm, &two) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(discrete_relative_entropy(&two, &two), 0.0);
        assert!(discrete_relative_entropy(&two, &pm).is_infinite());
    }
}
