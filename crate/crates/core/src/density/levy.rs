use std::fmt;
use std::sync::Arc;

use super::analytic::AnalyticDensity;
use super::grid::GridDensity;
use crate::error::{invalid, Error, Result};

/// A distribution function together with its effective support `[a, b]`.
#[derive(Clone)]
pub struct DistributionFunction {
    cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support_low: f64,
    support_high: f64,
}

impl fmt::Debug for DistributionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributionFunction")
            .field("support_low", &self.support_low)
            .field("support_high", &self.support_high)
            .finish_non_exhaustive()
    }
}

impl DistributionFunction {
    pub fn new<F>(cdf: F, support_low: f64, support_high: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support_low.is_finite() && support_high.is_finite() && support_low <= support_high) {
            return Err(invalid(format!(
                "support [{support_low}, {support_high}] must be finite and ordered"
            )));
        }
        Ok(DistributionFunction {
            cdf: Arc::new(cdf),
            support_low,
            support_high,
        })
    }

    /// Exact CDF; the support is where the tails fall below `1e-12`.
    pub fn from_analytic(d: &AnalyticDensity) -> Result<Self> {
        d.validate()?;
        let (lo, hi) = d.mass_window(1e-12);
        let d = d.clone();
        Self::new(move |x| d.cdf(x), lo, hi)
    }

    /// Cumulative trapezoid sums joined linearly; 0 left and 1 right of the window.
    pub fn from_grid(g: &GridDensity) -> Result<Self> {
        let cum = g.cumulative();
        let total = *cum.last().unwrap_or(&1.0);
        let (start, step, n) = (g.grid_start(), g.grid_step(), g.len());
        let cdf = move |x: f64| {
            let u = (x - start) / step;
            if u <= 0.0 {
                return 0.0;
            }
            if u >= (n - 1) as f64 {
                return 1.0;
            }
            let i = u.floor() as usize;
            let r = u - i as f64;
            ((cum[i] * (1.0 - r) + cum[i + 1] * r) / total).clamp(0.0, 1.0)
        };
        Self::new(cdf, start, g.grid_end())
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.cdf)(x)
    }

    pub fn support_low(&self) -> f64 {
        self.support_low
    }

    pub fn support_high(&self) -> f64 {
        self.support_high
    }
}

/// Sampling points for the Lévy envelope condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl LevyGrid {
    /// Covers both supports, widened by 1 (the largest possible distance) on each side.
    pub fn covering(f: &DistributionFunction, g: &DistributionFunction, points: usize) -> Self {
        LevyGrid {
            lo: f.support_low.min(g.support_low) - 1.0,
            hi: f.support_high.max(g.support_high) + 1.0,
            points,
        }
    }

    fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(move |i| self.lo + i as f64 * h)
    }
}

const BISECTION_TOL: f64 = 1e-12;
const MONOTONE_TOL: f64 = 1e-10;

fn check_monotone(f: &DistributionFunction, xs: &[f64]) -> Result<Vec<f64>> {
    let vals: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    for (i, w) in vals.windows(2).enumerate() {
        if w[1] < w[0] - MONOTONE_TOL {
            return Err(Error::NonMonotoneCdf {
                x: xs[i + 1],
                drop: w[0] - w[1],
            });
        }
    }
    Ok(vals)
}

/// `F(x - e) - e <= G(x) <= F(x + e) + e` at every sampled `x`.
fn envelope_holds(f: &DistributionFunction, g_vals: &[f64], xs: &[f64], eps: f64) -> bool {
    xs.iter()
        .zip(g_vals)
        .all(|(&x, &gx)| f.eval(x - eps) - eps <= gx && gx <= f.eval(x + eps) + eps)
}

/// Lévy distance between `f` and `g`, discretized on `grid`.
///
/// The envelope condition is checked in both directions at the sampled points,
/// which makes the result exactly symmetric. Bisection stops at width `1e-12`
/// and returns the upper end.
pub fn levy_distance(
    f: &DistributionFunction,
    g: &DistributionFunction,
    grid: &LevyGrid,
) -> Result<f64> {
    if grid.points < 2 || !(grid.lo < grid.hi) {
        return Err(invalid("levy grid needs at least two points and lo < hi"));
    }
    let xs: Vec<f64> = grid.nodes().collect();
    let f_vals = check_monotone(f, &xs)?;
    let g_vals = check_monotone(g, &xs)?;
    let holds =
        |eps: f64| envelope_holds(f, &g_vals, &xs, eps) && envelope_holds(g, &f_vals, &xs, eps);
    if holds(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
