use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grid::{GridDensity, MIN_GRID_POINTS};
use crate::error::{invalid, Error, Result};
use crate::io::{f64_17, f64_vec_17};
use crate::numeric::{
    integrate, std_normal_cdf, std_normal_pdf, std_normal_sf, std_normal_upper_quantile,
};

/// Missing mass a render window may leave out. Heavy-tailed families get a
/// looser allowance since their windows would otherwise be unbounded.
pub const RENDER_MASS_TOL: f64 = 1e-10;
pub const RENDER_MASS_TOL_HEAVY: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    #[serde(with = "f64_17")]
    pub mean: f64,
    #[serde(with = "f64_17")]
    pub variance: f64,
}

impl Gaussian {
    pub fn new(mean: f64, variance: f64) -> Self {
        Gaussian { mean, variance }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let s = self.std_dev();
        std_normal_pdf((x - self.mean) / s) / s
    }

    pub fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.mean) / self.std_dev())
    }

    pub fn sf(&self, x: f64) -> f64 {
        std_normal_sf((x - self.mean) / self.std_dev())
    }

    /// `E[X^k]`, or `E|X|^k` when `absolute`.
    fn moment(&self, k: u32, absolute: bool) -> f64 {
        let s = self.std_dev();
        if !absolute || k % 2 == 0 {
            // binomial expansion with E[Z^j] = (j-1)!! for even j
            let mut total = 0.0;
            let mut binom = 1.0;
            let mut double_fact = 1.0;
            for j in 0..=k {
                if j > 0 {
                    binom *= (k - j + 1) as f64 / j as f64;
                }
                if j % 2 == 0 {
                    if j >= 2 {
                        double_fact *= (j - 1) as f64;
                    }
                    total +=
                        binom * self.mean.powi((k - j) as i32) * s.powi(j as i32) * double_fact;
                }
            }
            total
        } else {
            // split at the kink of |x|^k
            let f = |x: f64| x.abs().powi(k as i32) * self.pdf(x);
            let (lo, hi) = (self.mean - 40.0 * s, self.mean + 40.0 * s);
            let left = if lo < 0.0 {
                integrate(f, lo, hi.min(0.0), 200, 16)
            } else {
                0.0
            };
            let right = if hi > 0.0 {
                integrate(f, lo.max(0.0), hi, 200, 16)
            } else {
                0.0
            };
            left + right
        }
    }
}

/// Closed-form density families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum AnalyticDensity {
    Gaussian {
        #[serde(with = "f64_17")]
        mean: f64,
        #[serde(with = "f64_17")]
        variance: f64,
    },
    GaussianMixture {
        #[serde(with = "f64_vec_17")]
        weights: Vec<f64>,
        components: Vec<Gaussian>,
    },
    Uniform {
        #[serde(with = "f64_17")]
        a: f64,
        #[serde(with = "f64_17")]
        b: f64,
    },
    Cauchy {
        #[serde(with = "f64_17")]
        location: f64,
        #[serde(with = "f64_17")]
        scale: f64,
    },
    Exponential {
        #[serde(with = "f64_17")]
        rate: f64,
    },
}

impl AnalyticDensity {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        let d = AnalyticDensity::Gaussian { mean, variance };
        d.validate()?;
        Ok(d)
    }

    pub fn mixture(weights: Vec<f64>, components: Vec<Gaussian>) -> Result<Self> {
        let d = AnalyticDensity::GaussianMixture {
            weights,
            components,
        };
        d.validate()?;
        Ok(d)
    }

    /// `w * N(-a, v) + (1 - w) * N(a, v)`-style two-component helper.
    pub fn two_component(w: f64, m1: f64, v1: f64, m2: f64, v2: f64) -> Result<Self> {
        Self::mixture(
            vec![w, 1.0 - w],
            vec![Gaussian::new(m1, v1), Gaussian::new(m2, v2)],
        )
    }

    /// `0.5 N(-a, 1 - a^2) + 0.5 N(a, 1 - a^2)`, the unit-variance symmetric mixture.
    pub fn symmetric_unit_mixture(a: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) {
            return Err(invalid(format!(
                "mixture offset must lie in [0, 1), got {a}"
            )));
        }
        let v = 1.0 - a * a;
        Self::two_component(0.5, -a, v, a, v)
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let d = AnalyticDensity::Uniform { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        let d = AnalyticDensity::Cauchy { location, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let d = AnalyticDensity::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite, got {x}")))
            }
        };
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!(
                    "{name} must be finite and positive, got {x}"
                )))
            }
        };
        match self {
            AnalyticDensity::Gaussian { mean, variance } => {
                finite("mean", *mean)?;
                positive("variance", *variance)
            }
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return Err(invalid(
                        "mixture needs one weight per component and at least one component",
                    ));
                }
                for (w, c) in weights.iter().zip(components) {
                    if !(w.is_finite() && *w >= 0.0) {
                        return Err(invalid(format!("mixture weight {w} is not a probability")));
                    }
                    finite("component mean", c.mean)?;
                    positive("component variance", c.variance)?;
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(invalid(format!("mixture weights sum to {total}, not 1")));
                }
                Ok(())
            }
            AnalyticDensity::Uniform { a, b } => {
                finite("a", *a)?;
                finite("b", *b)?;
                if b > a {
                    Ok(())
                } else {
                    Err(invalid(format!("uniform needs a < b, got [{a}, {b}]")))
                }
            }
            AnalyticDensity::Cauchy { location, scale } => {
                finite("location", *location)?;
                positive("scale", *scale)
            }
            AnalyticDensity::Exponential { rate } => positive("rate", *rate),
        }
    }

    pub fn is_heavy_tailed(&self) -> bool {
        matches!(self, AnalyticDensity::Cauchy { .. })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            AnalyticDensity::Gaussian { mean, variance } => Gaussian::new(*mean, *variance).pdf(x),
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.pdf(x))
                .sum(),
            AnalyticDensity::Uniform { a, b } => {
                if (*a..=*b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            AnalyticDensity::Cauchy { location, scale } => {
                let z = (x - location) / scale;
                1.0 / (PI * scale * (1.0 + z * z))
            }
            AnalyticDensity::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            AnalyticDensity::Gaussian { mean, variance } => Gaussian::new(*mean, *variance).cdf(x),
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(x))
                .sum(),
            AnalyticDensity::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            AnalyticDensity::Cauchy { location, scale } => {
                f64::atan2(1.0, -(x - location) / scale) / PI
            }
            AnalyticDensity::Exponential { rate } => {
                if x > 0.0 {
                    -(-rate * x).exp_m1()
                } else {
                    0.0
                }
            }
        }
    }

    /// Upper tail `1 - F(x)`, accurate where it is small.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            AnalyticDensity::Gaussian { mean, variance } => Gaussian::new(*mean, *variance).sf(x),
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.sf(x))
                .sum(),
            AnalyticDensity::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            AnalyticDensity::Cauchy { location, scale } => {
                f64::atan2(1.0, (x - location) / scale) / PI
            }
            AnalyticDensity::Exponential { rate } => {
                if x > 0.0 {
                    (-rate * x).exp()
                } else {
                    1.0
                }
            }
        }
    }

    /// Points where the density jumps.
    pub fn jump_points(&self) -> Vec<f64> {
        match self {
            AnalyticDensity::Uniform { a, b } => vec![*a, *b],
            AnalyticDensity::Exponential { .. } => vec![0.0],
            _ => Vec::new(),
        }
    }

    /// Midpoint of the one-sided limits at a jump point.
    fn jump_value(&self, x: f64) -> f64 {
        match self {
            AnalyticDensity::Uniform { a, b } => 0.5 / (b - a),
            AnalyticDensity::Exponential { rate } => 0.5 * rate,
            _ => self.pdf(x),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            AnalyticDensity::Gaussian { mean, .. } => Some(*mean),
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } => Some(
                weights
                    .iter()
                    .zip(components)
                    .map(|(w, c)| w * c.mean)
                    .sum(),
            ),
            AnalyticDensity::Uniform { a, b } => Some(0.5 * (a + b)),
            AnalyticDensity::Cauchy { .. } => None,
            AnalyticDensity::Exponential { rate } => Some(1.0 / rate),
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match self {
            AnalyticDensity::Gaussian { variance, .. } => Some(*variance),
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } => {
                let m = self.mean()?;
                Some(
                    weights
                        .iter()
                        .zip(components)
                        .map(|(w, c)| w * (c.variance + (c.mean - m).powi(2)))
                        .sum(),
                )
            }
            AnalyticDensity::Uniform { a, b } => Some((b - a).powi(2) / 12.0),
            AnalyticDensity::Cauchy { .. } => None,
            AnalyticDensity::Exponential { rate } => Some(1.0 / (rate * rate)),
        }
    }

    /// `E[X^k]`, or `E|X|^k` when `absolute`.
    ///
    /// Cauchy returns `+inf` for absolute and even moments and `NaN` for odd
    /// signed moments, which do not exist.
    pub fn moment(&self, k: u32, absolute: bool) -> Result<f64> {
        if k == 0 {
            return Err(invalid("moment order k must be >= 1"));
        }
        let kf = k as f64;
        Ok(match self {
            AnalyticDensity::Gaussian { mean, variance } => {
                Gaussian::new(*mean, *variance).moment(k, absolute)
            }
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.moment(k, absolute))
                .sum(),
            AnalyticDensity::Uniform { a, b } => {
                let p = |x: f64| x.powi(k as i32 + 1);
                let raw = (p(*b) - p(*a)) / ((kf + 1.0) * (b - a));
                if !absolute || *a >= 0.0 {
                    raw
                } else if *b <= 0.0 {
                    raw.abs()
                } else {
                    (p(a.abs()) + p(*b)) / ((kf + 1.0) * (b - a))
                }
            }
            AnalyticDensity::Cauchy { .. } => {
                if absolute || k % 2 == 0 {
                    f64::INFINITY
                } else {
                    f64::NAN
                }
            }
            AnalyticDensity::Exponential { rate } => (1..=k).map(|j| j as f64 / rate).product(),
        })
    }

    /// Differential entropy in nats where a closed form exists.
    pub fn entropy(&self) -> Option<f64> {
        match self {
            AnalyticDensity::Gaussian { variance, .. } => {
                Some(0.5 * (2.0 * PI * E * variance).ln())
            }
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } if weights.len() == 1 => Some(0.5 * (2.0 * PI * E * components[0].variance).ln()),
            AnalyticDensity::GaussianMixture { .. } => None,
            AnalyticDensity::Uniform { a, b } => Some((b - a).ln()),
            AnalyticDensity::Cauchy { scale, .. } => Some((4.0 * PI * scale).ln()),
            AnalyticDensity::Exponential { rate } => Some(1.0 - rate.ln()),
        }
    }

    /// Fisher information where a closed form exists; `+inf` for densities with jumps.
    pub fn fisher(&self) -> Option<f64> {
        match self {
            AnalyticDensity::Gaussian { variance, .. } => Some(1.0 / variance),
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } if weights.len() == 1 => Some(1.0 / components[0].variance),
            AnalyticDensity::GaussianMixture { .. } => None,
            AnalyticDensity::Uniform { .. } | AnalyticDensity::Exponential { .. } => {
                Some(f64::INFINITY)
            }
            AnalyticDensity::Cauchy { scale, .. } => Some(0.5 / (scale * scale)),
        }
    }

    /// Law of `a * X + b` when it stays inside the family.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a != 0.0 && b.is_finite()) {
            return Err(invalid(format!(
                "affine map needs finite a != 0 and finite b, got a = {a}, b = {b}"
            )));
        }
        Ok(match self {
            AnalyticDensity::Gaussian { mean, variance } => AnalyticDensity::Gaussian {
                mean: a * mean + b,
                variance: a * a * variance,
            },
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } => AnalyticDensity::GaussianMixture {
                weights: weights.clone(),
                components: components
                    .iter()
                    .map(|c| Gaussian::new(a * c.mean + b, a * a * c.variance))
                    .collect(),
            },
            AnalyticDensity::Uniform { a: lo, b: hi } => {
                let (p, q) = (a * lo + b, a * hi + b);
                AnalyticDensity::Uniform {
                    a: p.min(q),
                    b: p.max(q),
                }
            }
            AnalyticDensity::Cauchy { location, scale } => AnalyticDensity::Cauchy {
                location: a * location + b,
                scale: a.abs() * scale,
            },
            AnalyticDensity::Exponential { rate } => {
                if a > 0.0 && b == 0.0 {
                    AnalyticDensity::Exponential { rate: rate / a }
                } else {
                    return Err(invalid(
                        "exponential family is only closed under positive scaling",
                    ));
                }
            }
        })
    }

    /// Smallest interval whose complement has probability at most `tail`.
    ///
    /// Exact for single families; for mixtures the union of component windows.
    pub fn mass_window(&self, tail: f64) -> (f64, f64) {
        let half = 0.5 * tail;
        match self {
            AnalyticDensity::Gaussian { mean, variance } => {
                let z = std_normal_upper_quantile(half) * variance.sqrt();
                (mean - z, mean + z)
            }
            AnalyticDensity::GaussianMixture { components, .. } => {
                let z = std_normal_upper_quantile(half);
                components
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                        let s = c.std_dev();
                        (lo.min(c.mean - z * s), hi.max(c.mean + z * s))
                    })
            }
            AnalyticDensity::Uniform { a, b } => (*a, *b),
            AnalyticDensity::Cauchy { location, scale } => {
                let z = scale / (PI * half).tan();
                (location - z, location + z)
            }
            AnalyticDensity::Exponential { rate } => (0.0, -tail.ln() / rate),
        }
    }

    /// Probability outside `[lo, hi]`.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        self.cdf(lo) + self.sf(hi)
    }

    pub fn render_mass_tol(&self) -> f64 {
        if self.is_heavy_tailed() {
            RENDER_MASS_TOL_HEAVY
        } else {
            RENDER_MASS_TOL
        }
    }
}

impl fmt::Display for AnalyticDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticDensity::Gaussian { mean, variance } => write!(f, "gauss:{mean},{variance}"),
            AnalyticDensity::GaussianMixture {
                weights,
                components,
            } => {
                write!(f, "mix:")?;
                for (i, (w, c)) in weights.iter().zip(components).enumerate() {
                    let sep = if i == 0 { "" } else { "," };
                    write!(f, "{sep}{w},{},{}", c.mean, c.variance)?;
                }
                Ok(())
            }
            AnalyticDensity::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
            AnalyticDensity::Cauchy { location, scale } => write!(f, "cauchy:{location},{scale}"),
            AnalyticDensity::Exponential { rate } => write!(f, "exp:{rate}"),
        }
    }
}

/// Parses `"gauss:mean,var"`, `"uniform:a,b"`, `"cauchy:loc,scale"`,
/// `"exp:rate"`, `"mix:w1,m1,v1,w2,m2,v2,..."` and `"symmix:a"`.
impl FromStr for AnalyticDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| invalid(format!("density descriptor {s:?} has no ':'")))?;
        let name = name.trim();
        let args = args
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        invalid(format!("{name}: {:?} is not a finite number", a.trim()))
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(invalid(format!(
                    "{name} takes {n} argument(s), got {}",
                    args.len()
                )))
            }
        };
        match name {
            "gauss" => want(2).and_then(|_| Self::gaussian(args[0], args[1])),
            "uniform" => want(2).and_then(|_| Self::uniform(args[0], args[1])),
            "cauchy" => want(2).and_then(|_| Self::cauchy(args[0], args[1])),
            "exp" => want(1).and_then(|_| Self::exponential(args[0])),
            "symmix" => want(1).and_then(|_| Self::symmetric_unit_mixture(args[0])),
            "mix" => {
                if args.is_empty() || args.len() % 3 != 0 {
                    return Err(invalid(format!(
                        "mix takes weight,mean,variance triples, got {} numbers",
                        args.len()
                    )));
                }
                let weights = args.chunks(3).map(|c| c[0]).collect();
                let comps = args.chunks(3).map(|c| Gaussian::new(c[1], c[2])).collect();
                Self::mixture(weights, comps)
            }
            other => Err(invalid(format!("unknown density family {other:?}"))),
        }
    }
}

/// Samples `density` at `n_points` equally spaced points spanning `window`.
///
/// Jump points within `1e-9` of a step from a grid point take the midpoint of
/// their one-sided limits. The result is renormalized and carries the window's
/// missing mass as `tail_mass`.
pub fn render(
    density: &AnalyticDensity,
    window: (f64, f64),
    n_points: usize,
) -> Result<GridDensity> {
    density.validate()?;
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid(format!(
            "render window [{lo}, {hi}] must be finite with lo < hi"
        )));
    }
    if n_points < MIN_GRID_POINTS {
        return Err(invalid(format!(
            "render needs at least {MIN_GRID_POINTS} points, got {n_points}"
        )));
    }
    let missing = density.mass_outside(lo, hi);
    let allowed = density.render_mass_tol();
    if missing > allowed {
        return Err(Error::WindowTooSmall {
            lo,
            hi,
            missing,
            allowed,
        });
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    Ok(sample(density, lo, step, n_points)?.with_tail_mass(missing))
}

/// Samples `density` on the lattice `start + i * step`, `i < n`, without a window check.
pub fn sample(density: &AnalyticDensity, start: f64, step: f64, n: usize) -> Result<GridDensity> {
    let jumps = density.jump_points();
    let values = (0..n)
        .map(|i| {
            let x = start + i as f64 * step;
            if jumps.iter().any(|j| (x - j).abs() <= 1e-9 * step) {
                density.jump_value(x)
            } else {
                density.pdf(x)
            }
        })
        .collect();
    GridDensity::new(start, step, values)
}

/// Renders on a window capturing all but `tail` (floored at the family's render
/// tolerance) of the mass, padded by `pad` on both sides.
pub fn render_auto(
    density: &AnalyticDensity,
    tail: f64,
    pad: f64,
    n_points: usize,
) -> Result<GridDensity> {
    let (lo, hi) = density.mass_window(tail.min(density.render_mass_tol()));
    render(density, (lo - pad, hi + pad), n_points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_moments() {
        let g = AnalyticDensity::gaussian(0.0, 4.0).unwrap();
        assert_eq!(g.moment(2, false).unwrap(), 4.0);
        assert_eq!(g.moment(4, false).unwrap(), 48.0);
        let shifted = AnalyticDensity::gaussian(1.0, 1.0).unwrap();
        // E|X| for N(1,1) = 2 phi(1) + 1 - 2 Phi(-1)
        let expected = 2.0 * std_normal_pdf(1.0) + 1.0 - 2.0 * std_normal_cdf(-1.0);
        assert!((shifted.moment(1, true).unwrap() - expected).abs() < 1e-12);
        assert_eq!(shifted.moment(3, false).unwrap(), 4.0);
        let u = AnalyticDensity::uniform(0.0, 1.0).unwrap();
        assert!((u.moment(2, false).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        let u2 = AnalyticDensity::uniform(-1.0, 3.0).unwrap();
        assert!((u2.moment(1, true).unwrap() - 10.0 / 8.0).abs() < 1e-15);
        let c = AnalyticDensity::cauchy(0.0, 1.0).unwrap();
        assert_eq!(c.moment(1, true).unwrap(), f64::INFINITY);
        assert!(c.moment(1, false).unwrap().is_nan());
        let e = AnalyticDensity::exponential(2.0).unwrap();
        assert!((e.moment(3, false).unwrap() - 0.75).abs() < 1e-16);
    }

    #[test]
    fn cdf_and_sf_are_complementary() {
        let families = [
            AnalyticDensity::gaussian(0.3, 2.0).unwrap(),
            AnalyticDensity::two_component(0.3, -1.0, 0.5, 2.0, 1.5).unwrap(),
            AnalyticDensity::uniform(-1.0, 2.0).unwrap(),
            AnalyticDensity::cauchy(1.0, 0.5).unwrap(),
            AnalyticDensity::exponential(1.5).unwrap(),
        ];
        for d in &families {
            for x in [-3.0, -0.2, 0.0, 0.7, 4.0] {
                assert!((d.cdf(x) + d.sf(x) - 1.0).abs() < 1e-15, "{d:?} at {x}");
            }
        }
    }

    #[test]
    fn cauchy_window_tail_matches_request() {
        let c = AnalyticDensity::cauchy(0.0, 1.0).unwrap();
        let (lo, hi) = c.mass_window(1e-5);
        assert!((c.mass_outside(lo, hi) - 1e-5).abs() < 1e-15);
        // window quoted for the [-1e4, 1e4] example
        let missing = c.mass_outside(-1e4, 1e4);
        assert!((missing - 6.366_197_723_675_813e-5).abs() < 1e-12);
    }

    #[test]
    fn render_rejects_small_windows() {
        let g = AnalyticDensity::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(
            render(&g, (-5.0, 5.0), 100),
            Err(Error::WindowTooSmall { .. })
        ));
        assert!(render(&g, (-7.0, 7.0), 100).is_ok());
        assert!(render(&g, (-7.0, 7.0), 7).is_err());
        assert!(render(&g, (7.0, -7.0), 100).is_err());
    }

    #[test]
    fn uniform_render_takes_half_values_at_jumps() {
        let u = AnalyticDensity::uniform(0.0, 1.0).unwrap();
        let g = render(&u, (-1.0, 2.0), 3001).unwrap();
        assert!((g.values()[1000] - 0.5).abs() < 1e-12);
        assert!((g.values()[1500] - 1.0).abs() < 1e-12);
        assert_eq!(g.values()[10], 0.0);
    }

    #[test]
    fn affine_entropy_and_fisher() {
        let families = [
            AnalyticDensity::gaussian(0.3, 2.0).unwrap(),
            AnalyticDensity::uniform(-1.0, 2.0).unwrap(),
            AnalyticDensity::cauchy(1.0, 0.5).unwrap(),
        ];
        for d in &families {
            let t = d.affine(-2.5, 1.0).unwrap();
            let gap = t.entropy().unwrap() - d.entropy().unwrap() - 2.5f64.ln();
            assert!(gap.abs() < 1e-14, "{d:?}");
        }
        let e = AnalyticDensity::exponential(2.0).unwrap();
        assert!(e.affine(-1.0, 0.0).is_err());
        assert!(
            (e.affine(4.0, 0.0).unwrap().entropy().unwrap() - e.entropy().unwrap() - 4f64.ln())
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn json_is_tagged_by_variant() {
        let d = AnalyticDensity::cauchy(0.0, 1.0).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert!(text.starts_with(r#"{"variant":"Cauchy""#), "{text}");
        let back: AnalyticDensity = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn descriptors_round_trip() {
        for text in [
            "gauss:0,1",
            "uniform:-1,2.5",
            "cauchy:0,1",
            "exp:2",
            "mix:0.25,-1,0.5,0.75,1,2",
        ] {
            let d: AnalyticDensity = text.parse().unwrap();
            assert_eq!(d.to_string(), text);
        }
        let m: AnalyticDensity = "symmix:0.5".parse().unwrap();
        assert_eq!(m, AnalyticDensity::symmetric_unit_mixture(0.5).unwrap());
        assert!("gauss:0".parse::<AnalyticDensity>().is_err());
        assert!("gauss:0,-1".parse::<AnalyticDensity>().is_err());
        assert!("beta:1,2".parse::<AnalyticDensity>().is_err());
        assert!("mix:0.5,0".parse::<AnalyticDensity>().is_err());
    }
}
