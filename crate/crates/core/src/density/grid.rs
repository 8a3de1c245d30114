use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::io::{f64_17, f64_vec_17};
use crate::numeric::{trapezoid, trapezoid_map, CompensatedSum};

pub const MIN_GRID_POINTS: usize = 8;
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Nonnegative density sampled at `grid_start + i * grid_step`.
///
/// Construction renormalizes to unit trapezoid mass. `tail_mass` records how
/// much probability the sampling window is known to have cut off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridDensity {
    grid_start: f64,
    grid_step: f64,
    values: Vec<f64>,
    tail_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    #[serde(with = "f64_17")]
    grid_start: f64,
    #[serde(with = "f64_17")]
    grid_step: f64,
    #[serde(with = "f64_vec_17")]
    values: Vec<f64>,
    #[serde(with = "f64_17", default, skip_serializing_if = "is_zero")]
    tail_mass: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl TryFrom<GridRepr> for GridDensity {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        Ok(GridDensity::new(r.grid_start, r.grid_step, r.values)?.with_tail_mass(r.tail_mass))
    }
}

impl From<GridDensity> for GridRepr {
    fn from(g: GridDensity) -> Self {
        GridRepr {
            grid_start: g.grid_start,
            grid_step: g.grid_step,
            values: g.values,
            tail_mass: g.tail_mass,
        }
    }
}

impl GridDensity {
    /// Validates the samples and rescales them to unit trapezoid mass.
    pub fn new(grid_start: f64, grid_step: f64, values: Vec<f64>) -> Result<Self> {
        if !grid_start.is_finite() {
            return Err(invalid("grid_start must be finite"));
        }
        if !(grid_step.is_finite() && grid_step > 0.0) {
            return Err(invalid(format!(
                "grid_step must be finite and positive, got {grid_step}"
            )));
        }
        if values.len() < MIN_GRID_POINTS {
            return Err(invalid(format!(
                "a grid needs at least {MIN_GRID_POINTS} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid(format!(
                "value {i} is {} (must be finite and >= 0)",
                values[i]
            )));
        }
        let mut g = GridDensity {
            grid_start,
            grid_step,
            values,
            tail_mass: 0.0,
        };
        g.normalize()?;
        Ok(g)
    }

    pub(crate) fn from_parts_unchecked(
        grid_start: f64,
        grid_step: f64,
        values: Vec<f64>,
        tail_mass: f64,
    ) -> Self {
        GridDensity {
            grid_start,
            grid_step,
            values,
            tail_mass,
        }
    }

    pub(crate) fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::NotNormalized(mass));
        }
        // already-normalized input is left bit-for-bit unchanged
        if (mass - 1.0).abs() > 1e-14 {
            let inv = 1.0 / mass;
            self.values.iter_mut().for_each(|v| *v *= inv);
        }
        Ok(())
    }

    pub fn with_tail_mass(mut self, tail_mass: f64) -> Self {
        self.tail_mass = tail_mass.max(0.0);
        self
    }

    pub fn grid_start(&self) -> f64 {
        self.grid_start
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn grid_end(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Probability known to lie outside the window.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.grid_start + i as f64 * self.grid_step
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.values, self.grid_step)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        trapezoid_map(&self.values, self.grid_step, |i, v| self.x(i) * v) / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        trapezoid_map(&self.values, self.grid_step, |i, v| {
            let d = self.x(i) - m;
            d * d * v
        }) / self.mass()
    }

    /// Trapezoid estimate of `E[X^k]` (or `E|X|^k`) over the window.
    pub fn moment(&self, k: u32, absolute: bool) -> Result<f64> {
        if k == 0 {
            return Err(invalid("moment order k must be >= 1"));
        }
        if self.tail_mass > 0.0 {
            log::warn!(
                "grid moment of order {k} ignores {:.3e} of probability outside the window",
                self.tail_mass
            );
        }
        let m = trapezoid_map(&self.values, self.grid_step, |i, v| {
            let x = self.x(i);
            let p = if absolute {
                x.abs().powi(k as i32)
            } else {
                x.powi(k as i32)
            };
            p * v
        });
        Ok(m / self.mass())
    }

    /// Cumulative trapezoid sums, one per grid point, starting at 0.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = CompensatedSum::new();
        out.push(0.0);
        for w in self.values.windows(2) {
            acc.add(0.5 * self.grid_step * (w[0] + w[1]));
            out.push(acc.value());
        }
        out
    }

    /// Linear interpolation of the samples, zero outside the window.
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.grid_start) / self.grid_step;
        let n = self.values.len();
        if !(u >= 0.0 && u <= (n - 1) as f64) {
            return 0.0;
        }
        let i = (u.floor() as usize).min(n - 2);
        let r = u - i as f64;
        self.values[i] * (1.0 - r) + self.values[i + 1] * r
    }

    /// Density of `c * X` for `c > 0`. Exact: only the grid is rescaled.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!(
                "scale factor must be finite and positive, got {c}"
            )));
        }
        let inv = 1.0 / c;
        Ok(GridDensity {
            grid_start: self.grid_start * c,
            grid_step: self.grid_step * c,
            values: self.values.iter().map(|v| v * inv).collect(),
            tail_mass: self.tail_mass,
        })
    }

    /// Density of `X + b`.
    pub fn shifted(&self, b: f64) -> Self {
        GridDensity {
            grid_start: self.grid_start + b,
            ..self.clone()
        }
    }

    /// Every second sample starting at index 0, on a grid of step `2 * grid_step`.
    ///
    /// Values are not renormalized; used for refinement diagnostics.
    pub(crate) fn coarse_samples(&self) -> Vec<f64> {
        self.values.iter().step_by(2).copied().collect()
    }

    /// Pads with zeros so that the window covers `[lo, hi]`, keeping the lattice.
    pub fn padded_to(&self, lo: f64, hi: f64) -> Self {
        let h = self.grid_step;
        let left = if lo < self.grid_start {
            ((self.grid_start - lo) / h).ceil() as usize
        } else {
            0
        };
        let end = self.grid_end();
        let right = if hi > end {
            ((hi - end) / h).ceil() as usize
        } else {
            0
        };
        if left == 0 && right == 0 {
            return self.clone();
        }
        let mut values = vec![0.0; left];
        values.extend_from_slice(&self.values);
        values.resize(values.len() + right, 0.0);
        GridDensity {
            grid_start: self.grid_start - left as f64 * h,
            grid_step: h,
            values,
            tail_mass: self.tail_mass,
        }
    }

    /// Drops leading and trailing samples that are exactly zero, keeping at least
    /// one zero on each side and at least `MIN_GRID_POINTS` samples.
    pub fn trimmed(&self) -> Self {
        let n = self.values.len();
        let first = self.values.iter().position(|&v| v > 0.0).unwrap_or(0);
        let last = self.values.iter().rposition(|&v| v > 0.0).unwrap_or(n - 1);
        let mut lo = first.saturating_sub(1);
        let mut hi = (last + 1).min(n - 1);
        while hi - lo + 1 < MIN_GRID_POINTS {
            if lo > 0 {
                lo -= 1;
            }
            if hi - lo + 1 < MIN_GRID_POINTS && hi < n - 1 {
                hi += 1;
            }
        }
        GridDensity {
            grid_start: self.x(lo),
            grid_step: self.grid_step,
            values: self.values[lo..=hi].to_vec(),
            tail_mass: self.tail_mass,
        }
    }

    /// True when both grids share start, step and length up to `1e-12` relative.
    pub fn same_grid(&self, other: &GridDensity) -> bool {
        let close =
            |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-12 * scale.max(a.abs()).max(b.abs());
        self.values.len() == other.values.len()
            && close(self.grid_step, other.grid_step, 0.0)
            && close(
                self.grid_start,
                other.grid_start,
                self.grid_step * self.values.len() as f64,
            )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> GridDensity {
        GridDensity::new(
            -1.0,
            0.25,
            vec![0.0, 0.25, 0.5, 0.75, 1.0, 0.75, 0.5, 0.25, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn construction_normalizes() {
        let g = GridDensity::new(0.0, 0.5, vec![2.0; 9]).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-15);
        assert!((g.values()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GridDensity::new(0.0, 0.0, vec![1.0; 9]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![1.0; 7]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![-1.0; 9]).is_err());
        assert!(matches!(
            GridDensity::new(0.0, 1.0, vec![0.0; 9]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn tent_moments() {
        let g = tent();
        assert!(g.mean().abs() < 1e-15);
        // tent on [-1, 1]: trapezoid second moment is 1/6 - h^2/6
        assert!((g.variance() - (1.0 / 6.0 - 0.0625 / 6.0)).abs() < 1e-14);
        assert_eq!(*g.cumulative().last().unwrap(), 1.0);
    }

    #[test]
    fn scaling_preserves_mass_exactly_in_structure() {
        let g = tent().scaled(3.0).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-15);
        assert!((g.variance() - 9.0 * tent().variance()).abs() < 1e-13);
    }

    #[test]
    fn padding_and_trimming_invert() {
        let g = tent();
        let p = g.padded_to(-3.0, 2.0);
        assert_eq!(p.len(), 9 + 8 + 4);
        assert!((p.grid_start() + 3.0).abs() < 1e-15);
        let t = p.trimmed();
        assert_eq!(t.values(), g.values());
    }

    #[test]
    fn json_round_trip() {
        let g = tent().with_tail_mass(1e-12);
        let text = serde_json::to_string(&g).unwrap();
        let back: GridDensity = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }
}
