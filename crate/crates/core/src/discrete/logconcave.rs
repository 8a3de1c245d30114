use serde::Serialize;

use super::pmf::IntegerPmf;
use crate::density::AnalyticDensity;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

const LOG_CONCAVITY_TOL: f64 = 1e-15;
/// Relative rounding allowed on `sigma >= 2` gates.
pub(crate) const SIGMA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogConcavityCertificate {
    pub is_log_concave: bool,
    pub first_violation: Option<i64>,
    /// `p(k-1) p(k+1) - p(k)^2` at the first violation.
    pub violation_magnitude: Option<f64>,
}

/// Checks `p(k)^2 >= p(k-1) p(k+1) - 1e-15` at every interior `k` of the window.
pub fn check_log_concave(p: &IntegerPmf) -> LogConcavityCertificate {
    let probs = p.probs();
    for i in 1..probs.len().saturating_sub(1) {
        let gap = probs[i - 1] * probs[i + 1] - probs[i] * probs[i];
        if gap > LOG_CONCAVITY_TOL {
            return LogConcavityCertificate {
                is_log_concave: false,
                first_violation: Some(p.k_min() + i as i64),
                violation_magnitude: Some(gap),
            };
        }
    }
    LogConcavityCertificate {
        is_log_concave: true,
        first_violation: None,
        violation_magnitude: None,
    }
}

pub(crate) fn require_log_concave(p: &IntegerPmf) -> Result<()> {
    let cert = check_log_concave(p);
    if !cert.is_log_concave {
        return Err(Error::NotLogConcave {
            k: cert.first_violation,
        });
    }
    let (lo, hi) = p.positive_range();
    if let Some(k) = (lo..=hi).find(|&k| p.prob(k) == 0.0) {
        return Err(Error::NotLogConcave { k: Some(k) });
    }
    Ok(())
}

/// An integrable log-concave function on the real line, as used by the
/// concentration bound.
pub trait LogConcaveProfile {
    fn value(&self, x: f64) -> f64;
    fn total_integral(&self) -> f64;
    /// `int x f / int f`.
    fn barycenter(&self) -> f64;
    fn is_log_concave(&self) -> bool {
        true
    }
}

/// `exp` of the piecewise-linear interpolation of `ln p` between consecutive
/// integers of the positive support, zero elsewhere.
#[derive(Debug, Clone)]
pub struct ContinuousExtension {
    base: IntegerPmf,
    ln_probs: Vec<f64>,
    total_integral: f64,
    extension_mean: f64,
    mode_location: f64,
}

/// `int_0^1 e^{a + b r} dr` given `pa = e^a`, `pb = e^{a+b}`.
fn segment_mass(pa: f64, pb: f64, b: f64) -> f64 {
    if b.abs() < 1.0 {
        if b == 0.0 {
            pa
        } else {
            pa * b.exp_m1() / b
        }
    } else {
        (pb - pa) / b
    }
}

/// `int_0^1 r e^{a + b r} dr`.
fn segment_first_moment(pa: f64, pb: f64, b: f64) -> f64 {
    if b.abs() < 0.5 {
        // sum_n b^n / (n! (n + 2))
        let mut term = 1.0;
        let mut acc = 0.0;
        for n in 0..30 {
            acc += term / (n as f64 + 2.0);
            term *= b / (n as f64 + 1.0);
        }
        pa * acc
    } else {
        (pb * (b - 1.0) + pa) / (b * b)
    }
}

/// Builds the log-linear extension of a log-concave pmf.
pub fn build_extension(p: &IntegerPmf) -> Result<ContinuousExtension> {
    require_log_concave(p)?;
    let base = p.trimmed();
    let probs = base.probs();
    let ln_probs: Vec<f64> = probs.iter().map(|q| q.ln()).collect();
    let mut mass = CompensatedSum::new();
    let mut first = CompensatedSum::new();
    for j in 0..probs.len().saturating_sub(1) {
        let b = ln_probs[j + 1] - ln_probs[j];
        let i0 = segment_mass(probs[j], probs[j + 1], b);
        let i1 = segment_first_moment(probs[j], probs[j + 1], b);
        let x = (base.k_min() + j as i64) as f64;
        mass.add(i0);
        first.add(x * i0 + i1);
    }
    let total = mass.value();
    let mean = if total > 0.0 {
        first.value() / total
    } else {
        base.k_min() as f64
    };
    let mode = base.max_prob().0 as f64;
    Ok(ContinuousExtension {
        base,
        ln_probs,
        total_integral: total,
        extension_mean: mean,
        mode_location: mode,
    })
}

impl ContinuousExtension {
    pub fn base(&self) -> &IntegerPmf {
        &self.base
    }

    pub fn total_integral(&self) -> f64 {
        self.total_integral
    }

    pub fn extension_mean(&self) -> f64 {
        self.extension_mean
    }

    pub fn mode_location(&self) -> f64 {
        self.mode_location
    }

    pub fn support(&self) -> (f64, f64) {
        (self.base.k_min() as f64, self.base.k_max() as f64)
    }

    /// `f(x)`; returns `p(k)` bit-for-bit at integers of the support.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return 0.0;
        }
        let u = x - lo;
        let j = u.floor() as usize;
        let r = u - j as f64;
        if r == 0.0 {
            return self.base.probs()[j];
        }
        ((1.0 - r) * self.ln_probs[j] + r * self.ln_probs[j + 1]).exp()
    }
}

impl LogConcaveProfile for ContinuousExtension {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn total_integral(&self) -> f64 {
        self.total_integral
    }

    fn barycenter(&self) -> f64 {
        self.extension_mean
    }
}

impl LogConcaveProfile for AnalyticDensity {
    fn value(&self, x: f64) -> f64 {
        self.pdf(x)
    }

    fn total_integral(&self) -> f64 {
        1.0
    }

    fn barycenter(&self) -> f64 {
        self.mean().unwrap_or(f64::NAN)
    }

    fn is_log_concave(&self) -> bool {
        match self {
            AnalyticDensity::Gaussian { .. }
            | AnalyticDensity::Uniform { .. }
            | AnalyticDensity::Exponential { .. } => true,
            AnalyticDensity::GaussianMixture { weights, .. } => weights.len() == 1,
            AnalyticDensity::Cauchy { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxPmfBounds {
    pub max_p: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

/// `max_k p(k)` against `[1 / (4 sigma), 1 / sigma]`.
pub fn maxpmf_bounds(p: &IntegerPmf) -> Result<MaxPmfBounds> {
    require_log_concave(p)?;
    let sigma = p.std_dev();
    if sigma < 2.0 * (1.0 - SIGMA_SLACK) {
        return Err(Error::PreconditionUnmet(format!(
            "max-pmf sandwich needs sigma >= 2, got {sigma}"
        )));
    }
    let max_p = p.max_prob().1;
    let (lower, upper) = (0.25 / sigma, 1.0 / sigma);
    Ok(MaxPmfBounds {
        max_p,
        lower,
        upper,
        within: (lower..=upper).contains(&max_p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::pmf::{geometric, uniform_int};

    #[test]
    fn bimodal_violation_is_reported_at_first_k() {
        let p = IntegerPmf::new(0, vec![0.4, 0.1, 0.5]).unwrap();
        let c = check_log_concave(&p);
        assert!(!c.is_log_concave);
        assert_eq!(c.first_violation, Some(1));
        assert!((c.violation_magnitude.unwrap() - 0.19).abs() < 1e-15);
        assert!(matches!(
            build_extension(&p),
            Err(Error::NotLogConcave { k: Some(1) })
        ));
    }

    #[test]
    fn interior_zero_is_rejected_by_the_extension() {
        let p = IntegerPmf::new(0, vec![0.5, 0.5, 0.0, 1e-20]).unwrap();
        assert!(check_log_concave(&p).is_log_concave);
        assert!(build_extension(&p).is_err());
    }

    #[test]
    fn segment_formulas_match_on_both_branches() {
        for b in [1e-9, 0.3, 0.49, 0.51, 2.0, -3.0] {
            let (pa, pb) = (0.7, 0.7 * f64::exp(b));
            let i0 = segment_mass(pa, pb, b);
            let i1 = segment_first_moment(pa, pb, b);
            let q0 = crate::numeric::integrate(|r| pa * (b * r).exp(), 0.0, 1.0, 4, 16);
            let q1 = crate::numeric::integrate(|r| r * pa * (b * r).exp(), 0.0, 1.0, 4, 16);
            assert!((i0 - q0).abs() < 1e-14, "b = {b}");
            assert!((i1 - q1).abs() < 1e-14, "b = {b}");
        }
    }

    #[test]
    fn geometric_extension_is_one_exponential() {
        let q: f64 = 0.8;
        let p = geometric(q, 1e-14).unwrap();
        let f = build_extension(&p).unwrap();
        let n = p.len() as f64 - 1.0;
        // p(0) int_0^n q^x dx
        let exact = p.prob(0) * (q.powf(n) - 1.0) / q.ln();
        assert!((f.total_integral() - exact).abs() < 1e-12);
        assert!((f.eval(2.5) - p.prob(0) * q.powf(2.5)).abs() < 1e-15);
        assert_eq!(f.eval(3.0), p.prob(3));
    }

    #[test]
    fn uniform_sandwich() {
        let p = uniform_int(0, 19).unwrap();
        let b = maxpmf_bounds(&p).unwrap();
        assert!(b.within);
        assert_eq!(b.max_p, 0.05);
        assert!(matches!(
            maxpmf_bounds(&uniform_int(0, 3).unwrap()),
            Err(Error::PreconditionUnmet(_))
        ));
    }
}
