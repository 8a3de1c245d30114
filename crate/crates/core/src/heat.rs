//! Gaussian smoothing, the perturbation path `sqrt(t) X + sqrt(1 - t) Z`, de
//! Bruijn checks, EPI deficits along that path, submodularity and the
//! weak-stability table.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{
    convolve, levy_distance, AnalyticDensity, DistributionFunction, Gaussian, GridDensity, LevyGrid,
};
use crate::error::{invalid, Error, Result};
use crate::functionals::{differential_entropy, fisher_information, FunctionalEstimate};
use crate::io::{f64_17, f64_vec_17, format_f64};
use crate::numeric::{integrate, one_plus_u_log_minus_u};

/// Half-width of the smoothing kernel in grid steps: 8 standard deviations, at least 4 steps.
pub fn kernel_half_width(t: f64, step: f64) -> usize {
    ((8.0 * t.sqrt() / step).ceil() as usize).max(4)
}

fn gaussian_kernel(t: f64, step: f64, half_width: usize) -> Result<GridDensity> {
    let g = Gaussian::new(0.0, t);
    let k = half_width as i64;
    let values = (-k..=k).map(|j| g.pdf(j as f64 * step)).collect();
    GridDensity::new(-(k as f64) * step, step, values)
}

fn smooth_with_half_width(f: &GridDensity, t: f64, half_width: usize) -> Result<GridDensity> {
    let kernel = gaussian_kernel(t, f.grid_step(), half_width)?;
    convolve(f, &kernel)
}

/// `f * phi_t`. The grid grows by `8 sqrt(t)` (at least 4 steps) on each side
/// and stays on the same lattice.
pub fn gaussian_smooth(f: &GridDensity, t: f64) -> Result<GridDensity> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!(
            "smoothing variance t must be finite and positive, got {t}"
        )));
    }
    smooth_with_half_width(f, t, kernel_half_width(t, f.grid_step()))
}

fn standard_gaussian_on_step(step: f64) -> Result<GridDensity> {
    let half = (8.5 / step).ceil() as i64;
    let g = Gaussian::new(0.0, 1.0);
    let values = (-half..=half).map(|j| g.pdf(j as f64 * step)).collect();
    GridDensity::new(-(half as f64) * step, step, values)
}

/// Density of `sqrt(t) X + sqrt(1 - t) Z` for `X ~ f` and standard Gaussian `Z`.
///
/// For `0 < t < 1` this smooths with variance `(1 - t)/t` and then rescales by
/// `sqrt(t)`, which is exact on the grid. `t = 1` returns `f`; `t = 0` returns
/// `N(0, 1)` sampled with `f`'s step.
pub fn perturb(f: &GridDensity, t: f64) -> Result<GridDensity> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!(
            "perturbation time t must lie in [0, 1], got {t}"
        )));
    }
    if t == 1.0 {
        return Ok(f.clone());
    }
    if t == 0.0 {
        return standard_gaussian_on_step(f.grid_step());
    }
    gaussian_smooth(f, (1.0 - t) / t)?.scaled(t.sqrt())
}

/// Largest interior violation of the heat equation `d_t g = g'' / 2` by
/// `g_t = f * phi_t`, using central differences in `t` and `x`.
pub fn heat_equation_residual(f: &GridDensity, t: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0 && t - dt > 0.0) {
        return Err(invalid(format!("need 0 < dt < t, got t = {t}, dt = {dt}")));
    }
    let k = kernel_half_width(t + dt, f.grid_step());
    let plus = smooth_with_half_width(f, t + dt, k)?;
    let minus = smooth_with_half_width(f, t - dt, k)?;
    let mid = smooth_with_half_width(f, t, k)?;
    let h = f.grid_step();
    let (p, m, g) = (plus.values(), minus.values(), mid.values());
    let mut worst: f64 = 0.0;
    for i in 1..g.len() - 1 {
        let time = (p[i] - m[i]) / (2.0 * dt);
        let space = 0.5 * (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (h * h);
        worst = worst.max((time - space).abs());
    }
    Ok(worst)
}

/// Terms of the de Bruijn check at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebruijnResidual {
    #[serde(with = "f64_17")]
    pub t: f64,
    #[serde(with = "f64_17")]
    pub dt: f64,
    #[serde(with = "f64_17")]
    pub h_plus: f64,
    #[serde(with = "f64_17")]
    pub h_minus: f64,
    /// Central difference of `h(f * phi_t)` in `t`.
    #[serde(with = "f64_17")]
    pub entropy_derivative: f64,
    #[serde(with = "f64_17")]
    pub fisher: f64,
    /// `|entropy_derivative - fisher / 2|`.
    #[serde(with = "f64_17")]
    pub residual: f64,
}

/// Compares `d/dt h(f * phi_t)` with `I(f * phi_t) / 2`.
pub fn debruijn_residual(f: &GridDensity, t: f64, dt: f64) -> Result<DebruijnResidual> {
    if !(dt > 0.0 && t - dt > 0.0) {
        return Err(invalid(format!("need 0 < dt < t, got t = {t}, dt = {dt}")));
    }
    let k = kernel_half_width(t + dt, f.grid_step());
    let h_plus = differential_entropy(&smooth_with_half_width(f, t + dt, k)?)?.value;
    let h_minus = differential_entropy(&smooth_with_half_width(f, t - dt, k)?)?.value;
    let fisher = fisher_information(&smooth_with_half_width(f, t, k)?)?.value;
    let entropy_derivative = (h_plus - h_minus) / (2.0 * dt);
    Ok(DebruijnResidual {
        t,
        dt,
        h_plus,
        h_minus,
        entropy_derivative,
        fisher,
        residual: (entropy_derivative - 0.5 * fisher).abs(),
    })
}

/// One row of the small-`t` study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroLimitRow {
    #[serde(with = "f64_17")]
    pub t: f64,
    /// `h(f * phi_t)`.
    #[serde(with = "f64_17")]
    pub entropy: f64,
    /// `h(f * phi_t) - h(f)`.
    #[serde(with = "f64_17")]
    pub entropy_change: f64,
    #[serde(with = "f64_17")]
    pub half_fisher: f64,
    /// `(h(f * phi_{t + t/100}) - h(f * phi_t)) / (t/100)`.
    #[serde(with = "f64_17")]
    pub forward_difference: f64,
    pub jump_warning: bool,
}

/// Entropy continuity and the derivative limit as `t -> 0`.
pub fn debruijn_zero_limit(f: &GridDensity, t_sequence: &[f64]) -> Result<Vec<ZeroLimitRow>> {
    if t_sequence.windows(2).any(|w| !(w[1] < w[0])) || t_sequence.iter().any(|&t| !(t > 0.0)) {
        return Err(invalid(
            "t_sequence must be positive and strictly decreasing",
        ));
    }
    let h0 = differential_entropy(f)?.value;
    t_sequence
        .par_iter()
        .map(|&t| {
            let delta = t / 100.0;
            let k = kernel_half_width(t + delta, f.grid_step());
            let g = smooth_with_half_width(f, t, k)?;
            let h = differential_entropy(&g)?.value;
            let fisher = fisher_information(&g)?;
            let h_next = differential_entropy(&smooth_with_half_width(f, t + delta, k)?)?.value;
            Ok(ZeroLimitRow {
                t,
                entropy: h,
                entropy_change: h - h0,
                half_fisher: 0.5 * fisher.value,
                forward_difference: (h_next - h) / delta,
                jump_warning: fisher.has_jump_warning(),
            })
        })
        .collect()
}

/// Cubic Lagrange resampling onto a finer step `new_step`, falling back to linear
/// interpolation where the cubic goes negative or the stencil straddles a jump.
fn resample(g: &GridDensity, new_step: f64) -> Result<GridDensity> {
    let h = g.grid_step();
    let v = g.values();
    let n = v.len();
    let at = |i: i64| {
        if i < 0 || i >= n as i64 {
            0.0
        } else {
            v[i as usize]
        }
    };
    let jump_limit = 10.0 * h * g.max_value();
    let span = (n - 1) as f64 * h;
    let m_real = (span / new_step).floor() + 1.0;
    if m_real > MAX_RESAMPLED_POINTS as f64 {
        return Err(Error::GridMismatch(format!(
            "bringing a grid of step {h} and span {span} to step {new_step} needs {m_real:.3e} points, more than {MAX_RESAMPLED_POINTS}"
        )));
    }
    let m = m_real as usize;
    let values = (0..m)
        .map(|j| {
            let u = j as f64 * new_step / h;
            let i = u.floor() as i64;
            let r = u - i as f64;
            if r == 0.0 {
                return at(i);
            }
            let (a, b, c, d) = (at(i - 1), at(i), at(i + 1), at(i + 2));
            let linear = b * (1.0 - r) + c * r;
            let jumpy = (b - a).abs() > jump_limit
                || (c - b).abs() > jump_limit
                || (d - c).abs() > jump_limit;
            if jumpy {
                return linear;
            }
            let cubic = -a * r * (r - 1.0) * (r - 2.0) / 6.0
                + b * (r + 1.0) * (r - 1.0) * (r - 2.0) / 2.0
                - c * (r + 1.0) * r * (r - 2.0) / 2.0
                + d * (r + 1.0) * r * (r - 1.0) / 6.0;
            if cubic < 0.0 {
                linear
            } else {
                cubic
            }
        })
        .collect();
    Ok(GridDensity::new(g.grid_start(), new_step, values)?.with_tail_mass(g.tail_mass()))
}

/// Largest grid `resample` will build; wider step ratios are refused.
pub const MAX_RESAMPLED_POINTS: usize = 1 << 23;

/// Brings two grids to the finer of their steps.
fn common_step(a: &GridDensity, b: &GridDensity) -> Result<(GridDensity, GridDensity)> {
    let (ha, hb) = (a.grid_step(), b.grid_step());
    if (ha - hb).abs() <= 1e-12 * ha.max(hb) {
        Ok((a.clone(), b.clone()))
    } else if ha < hb {
        Ok((a.clone(), resample(b, ha)?))
    } else {
        Ok((resample(a, hb)?, b.clone()))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("lambda must lie in (0, 1), got {lambda}")))
    }
}

/// Density of `sqrt(lambda) X + sqrt(1 - lambda) Y` for independent `X ~ f`, `Y ~ g`.
pub fn mix_density(f: &GridDensity, g: &GridDensity, lambda: f64) -> Result<GridDensity> {
    check_lambda(lambda)?;
    let x = f.scaled(lambda.sqrt())?;
    let y = g.scaled((1.0 - lambda).sqrt())?;
    let (x, y) = common_step(&x, &y)?;
    convolve(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    #[serde(with = "f64_17")]
    pub lambda: f64,
    #[serde(with = "f64_17")]
    pub h_x: f64,
    #[serde(with = "f64_17")]
    pub h_y: f64,
    #[serde(with = "f64_17")]
    pub h_mix: f64,
    /// `h_mix - lambda h_x - (1 - lambda) h_y`.
    #[serde(with = "f64_17")]
    pub deficit: f64,
}

impl DeficitReport {
    pub fn new(lambda: f64, h_x: f64, h_y: f64, h_mix: f64) -> Self {
        DeficitReport {
            lambda,
            h_x,
            h_y,
            h_mix,
            deficit: h_mix - lambda * h_x - (1.0 - lambda) * h_y,
        }
    }
}

/// `h(sqrt(lambda) X + sqrt(1 - lambda) Y) - lambda h(X) - (1 - lambda) h(Y)`.
pub fn epi_deficit(f: &GridDensity, g: &GridDensity, lambda: f64) -> Result<DeficitReport> {
    let mix = mix_density(f, g, lambda)?;
    Ok(DeficitReport::new(
        lambda,
        differential_entropy(f)?.value,
        differential_entropy(g)?.value,
        differential_entropy(&mix)?.value,
    ))
}

/// `h(X + Y) + h(Y + Z) - h(Y) - h(X + Y + Z)` for independent inputs on a common step.
pub fn submodularity_gap(fx: &GridDensity, fy: &GridDensity, fz: &GridDensity) -> Result<f64> {
    let xy = convolve(fx, fy)?;
    let yz = convolve(fy, fz)?;
    let xyz = convolve(&xy, fz)?;
    let h = |d: &GridDensity| differential_entropy(d).map(|e| e.value);
    Ok(h(&xy)? + h(&yz)? - h(fy)? - h(&xyz)?)
}

/// `2^-10, ..., 2^-1` followed by 12 evenly spaced points in `(1/2, 1]`.
pub fn default_t_grid() -> Vec<f64> {
    let mut t: Vec<f64> = (1..=10).rev().map(|k| 0.5f64.powi(k)).collect();
    t.extend((1..=12).map(|j| 0.5 + j as f64 / 24.0));
    t
}

/// Difference step along the path: `min(t, 1 - t)/100`, or `t/100` at `t = 1`.
fn path_step(t: f64) -> f64 {
    if t < 1.0 {
        t.min(1.0 - t) / 100.0
    } else {
        t / 100.0
    }
}

/// `h`, `I` of `sqrt(t) X + sqrt(1 - t) Z` and its entropy at `t +- dt`.
struct PathPoint {
    h: f64,
    fisher: f64,
    h_prev: f64,
    h_next: Option<f64>,
    h_prev2: Option<f64>,
}

fn path_point(f: &GridDensity, t: f64, dt: f64) -> Result<PathPoint> {
    let at_t = perturb(f, t)?;
    let e = |d: &GridDensity| -> Result<FunctionalEstimate> { differential_entropy(d) };
    let h = e(&at_t)?.value;
    let fisher = fisher_information(&at_t)?.value;
    let h_prev = e(&perturb(f, t - dt)?)?.value;
    let (h_next, h_prev2) = if t + dt <= 1.0 {
        (Some(e(&perturb(f, t + dt)?)?.value), None)
    } else {
        (None, Some(e(&perturb(f, t - 2.0 * dt)?)?.value))
    };
    Ok(PathPoint {
        h,
        fisher,
        h_prev,
        h_next,
        h_prev2,
    })
}

impl PathPoint {
    fn derivative(&self, dt: f64) -> f64 {
        match (self.h_next, self.h_prev2) {
            (Some(next), _) => (next - self.h_prev) / (2.0 * dt),
            (None, Some(prev2)) => (3.0 * self.h - 4.0 * self.h_prev + prev2) / (2.0 * dt),
            (None, None) => f64::NAN,
        }
    }
}

/// The deficit `Delta(t)` along the perturbation path together with the
/// entropies and Fisher informations it is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatTrajectory {
    #[serde(with = "f64_17")]
    pub lambda: f64,
    #[serde(with = "f64_vec_17")]
    pub times: Vec<f64>,
    #[serde(with = "f64_vec_17")]
    pub h_x: Vec<f64>,
    #[serde(with = "f64_vec_17")]
    pub h_y: Vec<f64>,
    #[serde(with = "f64_vec_17")]
    pub h_mix: Vec<f64>,
    #[serde(with = "f64_vec_17")]
    pub fisher_x: Vec<f64>,
    #[serde(with = "f64_vec_17")]
    pub fisher_y: Vec<f64>,
    #[serde(with = "f64_vec_17")]
    pub fisher_mix: Vec<f64>,
    #[serde(with = "f64_vec_17")]
    pub delta: Vec<f64>,
    #[serde(with = "f64_vec_17")]
    pub delta_prime_numeric: Vec<f64>,
    #[serde(with = "f64_vec_17")]
    pub delta_prime_formula: Vec<f64>,
    /// Whether a central difference was available at each time.
    pub interior: Vec<bool>,
    /// Deficit of the unperturbed pair (`t = 1`).
    #[serde(with = "f64_17")]
    pub deficit_at_one: f64,
}

/// Outcome of the four trajectory checks with their tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryChecks {
    /// `max_t Delta(t) - Delta(1)`; must be at most `1e-5`.
    #[serde(with = "f64_17")]
    pub max_excess_over_endpoint: f64,
    /// Largest drop between consecutive times; must be at most `1e-5`.
    #[serde(with = "f64_17")]
    pub max_decrease: f64,
    /// Smallest formula derivative; must be at least `-1e-6`.
    #[serde(with = "f64_17")]
    pub min_formula_derivative: f64,
    /// Largest numeric-vs-formula gap at interior times; must be at most `1e-3`.
    #[serde(with = "f64_17")]
    pub max_derivative_gap: f64,
    pub passes: bool,
}

impl HeatTrajectory {
    pub fn checks(&self) -> TrajectoryChecks {
        let max_excess = self
            .delta
            .iter()
            .map(|d| d - self.deficit_at_one)
            .fold(f64::NEG_INFINITY, f64::max);
        let max_decrease = self
            .delta
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max);
        let min_formula = self
            .delta_prime_formula
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let max_gap = self
            .delta_prime_numeric
            .iter()
            .zip(&self.delta_prime_formula)
            .zip(&self.interior)
            .filter(|(_, &inner)| inner)
            .map(|((n, f), _)| (n - f).abs())
            .fold(0.0, f64::max);
        TrajectoryChecks {
            max_excess_over_endpoint: max_excess,
            max_decrease,
            min_formula_derivative: min_formula,
            max_derivative_gap: max_gap,
            passes: max_excess <= 1e-5
                && max_decrease <= 1e-5
                && min_formula >= -1e-6
                && max_gap <= 1e-3,
        }
    }

    pub const CSV_HEADER: [&'static str; 10] = [
        "t",
        "h_x",
        "h_y",
        "h_mix",
        "I_x",
        "I_y",
        "I_mix",
        "delta",
        "dprime_num",
        "dprime_formula",
    ];

    /// One row per time, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io_err = |e: csv::Error| invalid(format!("csv write failed: {e}"));
        out.write_record(Self::CSV_HEADER).map_err(io_err)?;
        for i in 0..self.times.len() {
            let row = [
                self.times[i],
                self.h_x[i],
                self.h_y[i],
                self.h_mix[i],
                self.fisher_x[i],
                self.fisher_y[i],
                self.fisher_mix[i],
                self.delta[i],
                self.delta_prime_numeric[i],
                self.delta_prime_formula[i],
            ];
            out.write_record(row.iter().map(|&x| format_f64(x)))
                .map_err(io_err)?;
        }
        out.flush()
            .map_err(|e| invalid(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

/// Fills the trajectory `Delta(t) = h(V_t) - lambda h(X_t) - (1 - lambda) h(Y_t)`
/// with `X_t`, `Y_t`, `V_t` the perturbations of `X`, `Y` and
/// `sqrt(lambda) X + sqrt(1 - lambda) Y`. Numeric derivatives use `dt = min(t, 1 - t)/100`.
pub fn deficit_monotonicity(
    f: &GridDensity,
    g: &GridDensity,
    lambda: f64,
    t_grid: &[f64],
) -> Result<HeatTrajectory> {
    check_lambda(lambda)?;
    if t_grid.is_empty()
        || t_grid.windows(2).any(|w| !(w[1] > w[0]))
        || t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0))
    {
        return Err(invalid("t_grid must be strictly increasing inside (0, 1]"));
    }
    let mix = mix_density(f, g, lambda)?;
    let deficit_at_one = DeficitReport::new(
        lambda,
        differential_entropy(f)?.value,
        differential_entropy(g)?.value,
        differential_entropy(&mix)?.value,
    )
    .deficit;
    let rows: Vec<(PathPoint, PathPoint, PathPoint)> = t_grid
        .par_iter()
        .map(|&t| {
            let dt = path_step(t);
            Ok((
                path_point(f, t, dt)?,
                path_point(g, t, dt)?,
                path_point(&mix, t, dt)?,
            ))
        })
        .collect::<Result<_>>()?;
    let n = t_grid.len();
    let mut tr = HeatTrajectory {
        lambda,
        times: t_grid.to_vec(),
        h_x: Vec::with_capacity(n),
        h_y: Vec::with_capacity(n),
        h_mix: Vec::with_capacity(n),
        fisher_x: Vec::with_capacity(n),
        fisher_y: Vec::with_capacity(n),
        fisher_mix: Vec::with_capacity(n),
        delta: Vec::with_capacity(n),
        delta_prime_numeric: Vec::with_capacity(n),
        delta_prime_formula: Vec::with_capacity(n),
        interior: Vec::with_capacity(n),
        deficit_at_one,
    };
    for (&t, (x, y, v)) in t_grid.iter().zip(&rows) {
        let dt = path_step(t);
        tr.h_x.push(x.h);
        tr.h_y.push(y.h);
        tr.h_mix.push(v.h);
        tr.fisher_x.push(x.fisher);
        tr.fisher_y.push(y.fisher);
        tr.fisher_mix.push(v.fisher);
        tr.delta.push(v.h - lambda * x.h - (1.0 - lambda) * y.h);
        tr.delta_prime_numeric
            .push(v.derivative(dt) - lambda * x.derivative(dt) - (1.0 - lambda) * y.derivative(dt));
        tr.delta_prime_formula
            .push((lambda * x.fisher + (1.0 - lambda) * y.fisher - v.fisher) / (2.0 * t));
        tr.interior.push(v.h_next.is_some());
    }
    Ok(tr)
}

/// One row of the weak-stability table for `X_a = N(-a, 1 - a^2)/2 + N(a, 1 - a^2)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakStabilityRow {
    #[serde(with = "f64_17")]
    pub a: f64,
    /// `delta_EPI,1/2(X_a, X_a)`.
    #[serde(with = "f64_17")]
    pub deficit: f64,
    /// `D(X_a || N(0, 1))`.
    #[serde(with = "f64_17")]
    pub kl_to_gaussian: f64,
    /// Lévy distance from `X_a` to the closest centred Gaussian.
    #[serde(with = "f64_17")]
    pub levy_to_gaussian: f64,
    #[serde(with = "f64_17")]
    pub fitted_variance: f64,
}

/// `D(sum_k w_k N(m_k, v) || N(0, 1))` by Gauss-Legendre quadrature, with the
/// integrand written as `phi * psi(u)` for `u = mixture / phi - 1`.
pub fn mixture_kl_to_standard(weights: &[f64], means: &[f64], v: f64) -> f64 {
    let half_ln_v = 0.5 * v.ln();
    let integrand = |x: f64| {
        let ell = |m: f64| -half_ln_v - (x - m) * (x - m) / (2.0 * v) + 0.5 * x * x;
        let u: f64 = weights
            .iter()
            .zip(means)
            .map(|(w, &m)| w * ell(m).exp_m1())
            .sum();
        let psi = if u > -0.5 {
            one_plus_u_log_minus_u(u)
        } else {
            let r: f64 = weights
                .iter()
                .zip(means)
                .map(|(w, &m)| w * ell(m).exp())
                .sum();
            if r > 0.0 {
                r * r.ln() - r + 1.0
            } else {
                1.0
            }
        };
        crate::numeric::std_normal_pdf(x) * psi
    };
    let reach = 14.0 + means.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    integrate(integrand, -reach, reach, 400, 20)
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn levy_to_centred_gaussian(x: &AnalyticDensity, points: usize) -> Result<(f64, f64)> {
    let fx = DistributionFunction::from_analytic(x)?;
    let dist = |var: f64| -> Result<f64> {
        let g = DistributionFunction::from_analytic(&AnalyticDensity::gaussian(0.0, var)?)?;
        levy_distance(&fx, &g, &LevyGrid::covering(&fx, &g, points))
    };
    let matched = x.variance().unwrap_or(1.0);
    let (mut lo, mut hi) = (0.5 * matched, 1.5 * matched);
    let mut c = hi - GOLDEN * (hi - lo);
    let mut d = lo + GOLDEN * (hi - lo);
    let (mut fc, mut fd) = (dist(c)?, dist(d)?);
    while hi - lo > 1e-9 * matched {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - GOLDEN * (hi - lo);
            fc = dist(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + GOLDEN * (hi - lo);
            fd = dist(d)?;
        }
    }
    let candidates = [(fc, c), (fd, d), (dist(matched)?, matched)];
    let best = candidates
        .iter()
        .copied()
        .fold(
            (f64::INFINITY, matched),
            |acc, x| if x.0 < acc.0 { x } else { acc },
        );
    Ok(best)
}

/// Deficit and Lévy distance to Gaussianity along a sequence of offsets `a`.
///
/// Both mixtures involved have unit variance and mean zero, so the deficit is
/// `D(X_a) - D(V_a)` with `V_a = (X_a + X_a')/sqrt(2)` the three-component
/// mixture `N(-sqrt(2) a, v)/4 + N(0, v)/2 + N(sqrt(2) a, v)/4`, `v = 1 - a^2`.
/// Each relative entropy is computed by quadrature, which resolves deficits far
/// below grid precision.
pub fn weak_stability_demo(a_sequence: &[f64]) -> Result<Vec<WeakStabilityRow>> {
    if let Some(a) = a_sequence.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(invalid(format!("offset a must lie in [0, 1), got {a}")));
    }
    a_sequence
        .par_iter()
        .map(|&a| {
            let v = 1.0 - a * a;
            let kl_x = mixture_kl_to_standard(&[0.5, 0.5], &[-a, a], v);
            let r = std::f64::consts::SQRT_2 * a;
            let kl_v = mixture_kl_to_standard(&[0.25, 0.5, 0.25], &[-r, 0.0, r], v);
            let x = AnalyticDensity::symmetric_unit_mixture(a)?;
            let (levy, fitted_variance) = levy_to_centred_gaussian(&x, 4001)?;
            Ok(WeakStabilityRow {
                a,
                deficit: kl_x - kl_v,
                kl_to_gaussian: kl_x,
                levy_to_gaussian: levy,
                fitted_variance,
            })
        })
        .collect()
}
