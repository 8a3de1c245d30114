use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{convolve_sequences, ConvolutionMethod};
use crate::error::{invalid, Error, Result};
use crate::io::{f64_17, f64_vec_17};
use crate::numeric::{
    ln_std_normal_interval_mass, std_normal_cdf, std_normal_interval_mass, std_normal_sf,
    std_normal_upper_quantile, CompensatedSum,
};

/// Default tail mass cut from infinite-support families.
pub const DEFAULT_TAIL: f64 = 1e-14;

/// Probability mass function on the integer window `k_min ..= k_min + len - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct IntegerPmf {
    k_min: i64,
    probs: Vec<f64>,
    mean: f64,
    variance: f64,
    tail_mass_dropped: f64,
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    k_min: i64,
    #[serde(with = "f64_vec_17")]
    probs: Vec<f64>,
    #[serde(with = "f64_17", default, skip_deserializing)]
    mean: f64,
    #[serde(with = "f64_17", default, skip_deserializing)]
    variance: f64,
    #[serde(with = "f64_17", default)]
    tail_mass_dropped: f64,
}

impl TryFrom<PmfRepr> for IntegerPmf {
    type Error = Error;

    fn try_from(r: PmfRepr) -> Result<Self> {
        Ok(IntegerPmf::new(r.k_min, r.probs)?.with_tail_mass_dropped(r.tail_mass_dropped))
    }
}

impl From<IntegerPmf> for PmfRepr {
    fn from(p: IntegerPmf) -> Self {
        PmfRepr {
            k_min: p.k_min,
            probs: p.probs,
            mean: p.mean,
            variance: p.variance,
            tail_mass_dropped: p.tail_mass_dropped,
        }
    }
}

impl IntegerPmf {
    /// Validates, normalizes to unit sum and computes mean and variance.
    pub fn new(k_min: i64, mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("pmf needs at least one probability"));
        }
        if let Some(i) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid(format!(
                "probability at k = {} is {}",
                k_min + i as i64,
                probs[i]
            )));
        }
        let total = compensated(&probs);
        if !(total > 0.0) {
            return Err(Error::NotNormalized(total));
        }
        if (total - 1.0).abs() > 1e-15 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        let mut m = CompensatedSum::new();
        for (i, p) in probs.iter().enumerate() {
            m.add(i as f64 * p);
        }
        let offset_mean = m.value();
        let mut v = CompensatedSum::new();
        for (i, p) in probs.iter().enumerate() {
            let d = i as f64 - offset_mean;
            v.add(d * d * p);
        }
        Ok(IntegerPmf {
            k_min,
            probs,
            mean: k_min as f64 + offset_mean,
            variance: v.value(),
            tail_mass_dropped: 0.0,
        })
    }

    pub fn point_mass(k: i64) -> Self {
        IntegerPmf::new(k, vec![1.0]).expect("point mass is valid")
    }

    pub fn with_tail_mass_dropped(mut self, t: f64) -> Self {
        self.tail_mass_dropped = t.max(0.0);
        self
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.probs.len() as i64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn tail_mass_dropped(&self) -> f64 {
        self.tail_mass_dropped
    }

    /// `p(k)`, zero outside the window.
    pub fn prob(&self, k: i64) -> f64 {
        if k < self.k_min {
            return 0.0;
        }
        self.probs
            .get((k - self.k_min) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn max_prob(&self) -> (i64, f64) {
        let (i, p) = self
            .probs
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc },
            );
        (self.k_min + i as i64, p)
    }

    /// Smallest and largest `k` with `p(k) > 0`.
    pub fn positive_range(&self) -> (i64, i64) {
        let first = self.probs.iter().position(|&p| p > 0.0).unwrap_or(0);
        let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        (self.k_min + first as i64, self.k_min + last as i64)
    }

    /// Law of `X + c`.
    pub fn shifted(&self, c: i64) -> Self {
        IntegerPmf {
            k_min: self.k_min + c,
            mean: self.mean + c as f64,
            ..self.clone()
        }
    }

    /// Drops zero entries at both ends of the window.
    pub fn trimmed(&self) -> Self {
        let (lo, hi) = self.positive_range();
        let a = (lo - self.k_min) as usize;
        let b = (hi - self.k_min) as usize;
        IntegerPmf {
            k_min: lo,
            probs: self.probs[a..=b].to_vec(),
            ..self.clone()
        }
    }
}

fn compensated(xs: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    xs.iter().for_each(|&x| s.add(x));
    s.value()
}

/// Law of `X1 + X2` for independent copies of `X ~ p`.
pub fn self_convolve(p: &IntegerPmf) -> IntegerPmf {
    self_convolve_with(p, ConvolutionMethod::Auto)
}

pub fn self_convolve_with(p: &IntegerPmf, method: ConvolutionMethod) -> IntegerPmf {
    let probs = convolve_sequences(p.probs(), p.probs(), method);
    let t = p.tail_mass_dropped;
    IntegerPmf::new(2 * p.k_min, probs)
        .expect("convolution of a pmf is a pmf")
        .with_tail_mass_dropped(2.0 * t - t * t)
}

/// Unnormalized weights grown outward from the mode by a ratio recurrence,
/// cut where the two tails together hold at most `tail` of the mass.
fn trimmed_from_mode<U, D>(
    mode: i64,
    lo_bound: i64,
    hi_bound: i64,
    tail: f64,
    up: U,
    down: D,
) -> Result<IntegerPmf>
where
    U: Fn(i64) -> f64,
    D: Fn(i64) -> f64,
{
    // stop generating once weights are far below anything the cut can keep
    let stop = (tail * 1e-6).max(1e-320);
    let mut right = vec![1.0];
    let mut k = mode;
    while k < hi_bound {
        let w = right.last().unwrap() * up(k);
        if w < stop {
            break;
        }
        right.push(w);
        k += 1;
    }
    let mut left = Vec::new();
    let mut k = mode;
    let mut w = 1.0;
    while k > lo_bound {
        w *= down(k);
        if w < stop {
            break;
        }
        left.push(w);
        k -= 1;
    }
    let mut weights: Vec<f64> = left.iter().rev().copied().collect();
    weights.extend_from_slice(&right);
    let k_first = mode - left.len() as i64;
    let total = compensated(&weights);
    let mut lo = 0;
    let mut hi = weights.len() - 1;
    let mut dropped = 0.0;
    let budget = 0.5 * tail * total;
    let mut acc = 0.0;
    while lo < hi && acc + weights[lo] <= budget {
        acc += weights[lo];
        lo += 1;
    }
    dropped += acc;
    acc = 0.0;
    while hi > lo && acc + weights[hi] <= budget {
        acc += weights[hi];
        hi -= 1;
    }
    dropped += acc;
    Ok(
        IntegerPmf::new(k_first + lo as i64, weights[lo..=hi].to_vec())?
            .with_tail_mass_dropped(dropped / total),
    )
}

/// `p(k) = (1 - q) q^k` for `k >= 0`, cut where the tail drops below `tail`.
pub fn geometric(q: f64, tail: f64) -> Result<IntegerPmf> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!(
            "geometric parameter q must lie in (0, 1), got {q}"
        )));
    }
    check_tail(tail)?;
    // P(X > K) = q^(K+1) <= tail
    let k_max = ((tail.ln() / q.ln()).ceil() as i64 - 1).max(0);
    let probs: Vec<f64> = (0..=k_max).map(|k| (1.0 - q) * q.powi(k as i32)).collect();
    Ok(IntegerPmf::new(0, probs)?.with_tail_mass_dropped(q.powf((k_max + 1) as f64)))
}

pub fn binomial(n: u64, p: f64, tail: f64) -> Result<IntegerPmf> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!(
            "binomial success probability must lie in (0, 1), got {p}"
        )));
    }
    if n == 0 {
        return Ok(IntegerPmf::point_mass(0));
    }
    check_tail(tail)?;
    let n_i = n as i64;
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as i64;
    let odds = p / (1.0 - p);
    trimmed_from_mode(
        mode,
        0,
        n_i,
        tail,
        |k| (n_i - k) as f64 / (k + 1) as f64 * odds,
        |k| k as f64 / (n_i - k + 1) as f64 / odds,
    )
}

pub fn poisson(lambda: f64, tail: f64) -> Result<IntegerPmf> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!(
            "poisson rate must be finite and positive, got {lambda}"
        )));
    }
    check_tail(tail)?;
    let mode = lambda.floor() as i64;
    trimmed_from_mode(
        mode,
        0,
        i64::MAX,
        tail,
        |k| lambda / (k + 1) as f64,
        |k| k as f64 / lambda,
    )
}

/// Uniform on `{a, ..., b}`.
pub fn uniform_int(a: i64, b: i64) -> Result<IntegerPmf> {
    if b < a {
        return Err(invalid(format!(
            "uniform pmf needs a <= b, got {{{a}..{b}}}"
        )));
    }
    let n = (b - a + 1) as usize;
    IntegerPmf::new(a, vec![1.0 / n as f64; n])
}

/// `P(k) = P(k <= Y < k + 1)` for `Y ~ N(mu, sigma2)` on the window `lo ..= hi`.
pub fn discretized_gaussian(mu: f64, sigma2: f64, window: (i64, i64)) -> Result<IntegerPmf> {
    if !(mu.is_finite() && sigma2.is_finite() && sigma2 > 0.0) {
        return Err(invalid(format!(
            "discretized gaussian needs finite mu and sigma2 > 0, got ({mu}, {sigma2})"
        )));
    }
    let (lo, hi) = window;
    if hi < lo {
        return Err(invalid("empty window"));
    }
    let s = sigma2.sqrt();
    let z = |k: i64| (k as f64 - mu) / s;
    let missing = std_normal_cdf(z(lo)) + std_normal_sf(z(hi + 1));
    if missing > 1e-12 {
        return Err(Error::WindowTooSmall {
            lo: lo as f64,
            hi: (hi + 1) as f64,
            missing,
            allowed: 1e-12,
        });
    }
    let probs = (lo..=hi)
        .map(|k| std_normal_interval_mass(z(k), z(k + 1)))
        .collect();
    Ok(IntegerPmf::new(lo, probs)?.with_tail_mass_dropped(missing))
}

/// Discretized gaussian on the window leaving out at most `tail` of the mass.
pub fn discretized_gaussian_auto(mu: f64, sigma2: f64, tail: f64) -> Result<IntegerPmf> {
    check_tail(tail)?;
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(invalid(format!(
            "sigma2 must be finite and positive, got {sigma2}"
        )));
    }
    let r = std_normal_upper_quantile(0.5 * tail.min(1e-12)) * sigma2.sqrt();
    discretized_gaussian(
        mu,
        sigma2,
        ((mu - r).floor() as i64 - 1, (mu + r).ceil() as i64 + 1),
    )
}

fn check_tail(tail: f64) -> Result<()> {
    if tail > 0.0 && tail < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("tail mass must lie in (0, 1), got {tail}")))
    }
}

/// Named pmf families, parsed from `"dgauss:mu,sigma2"`, `"geom:q"`,
/// `"binom:n,p"`, `"poisson:lambda"` and `"uniform:a,b"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PmfFamily {
    DiscretizedGaussian { mu: f64, sigma2: f64 },
    Geometric { q: f64 },
    Binomial { n: u64, p: f64 },
    Poisson { lambda: f64 },
    Uniform { a: i64, b: i64 },
}

impl PmfFamily {
    pub fn pmf(&self) -> Result<IntegerPmf> {
        self.pmf_with_tail(DEFAULT_TAIL)
    }

    pub fn pmf_with_tail(&self, tail: f64) -> Result<IntegerPmf> {
        match *self {
            PmfFamily::DiscretizedGaussian { mu, sigma2 } => {
                discretized_gaussian_auto(mu, sigma2, tail)
            }
            PmfFamily::Geometric { q } => geometric(q, tail),
            PmfFamily::Binomial { n, p } => binomial(n, p, tail),
            PmfFamily::Poisson { lambda } => poisson(lambda, tail),
            PmfFamily::Uniform { a, b } => uniform_int(a, b),
        }
    }

    /// Exact `ln p(k)` of the untruncated family, finite far into the tails.
    pub fn ln_prob(&self, k: i64) -> f64 {
        match *self {
            PmfFamily::DiscretizedGaussian { mu, sigma2 } => {
                let s = sigma2.sqrt();
                ln_std_normal_interval_mass((k as f64 - mu) / s, (k as f64 + 1.0 - mu) / s)
            }
            PmfFamily::Geometric { q } => {
                if k < 0 {
                    f64::NEG_INFINITY
                } else {
                    (1.0 - q).ln() + k as f64 * q.ln()
                }
            }
            PmfFamily::Binomial { n, p } => {
                if k < 0 || k as u64 > n {
                    return f64::NEG_INFINITY;
                }
                let (n, kf) = (n as f64, k as f64);
                libm::lgamma(n + 1.0) - libm::lgamma(kf + 1.0) - libm::lgamma(n - kf + 1.0)
                    + kf * p.ln()
                    + (n - kf) * (1.0 - p).ln()
            }
            PmfFamily::Poisson { lambda } => {
                if k < 0 {
                    f64::NEG_INFINITY
                } else {
                    -lambda + k as f64 * lambda.ln() - libm::lgamma(k as f64 + 1.0)
                }
            }
            PmfFamily::Uniform { a, b } => {
                if (a..=b).contains(&k) {
                    -((b - a + 1) as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Standard deviation of the untruncated family.
    pub fn std_dev(&self) -> f64 {
        match *self {
            // interval integrals add the rounding variance 1/12 only approximately
            PmfFamily::DiscretizedGaussian { sigma2, .. } => sigma2.sqrt(),
            PmfFamily::Geometric { q } => q.sqrt() / (1.0 - q),
            PmfFamily::Binomial { n, p } => (n as f64 * p * (1.0 - p)).sqrt(),
            PmfFamily::Poisson { lambda } => lambda.sqrt(),
            PmfFamily::Uniform { a, b } => ((((b - a + 1) as f64).powi(2) - 1.0) / 12.0).sqrt(),
        }
    }
}

impl fmt::Display for PmfFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PmfFamily::DiscretizedGaussian { mu, sigma2 } => write!(f, "dgauss:{mu},{sigma2}"),
            PmfFamily::Geometric { q } => write!(f, "geom:{q}"),
            PmfFamily::Binomial { n, p } => write!(f, "binom:{n},{p}"),
            PmfFamily::Poisson { lambda } => write!(f, "poisson:{lambda}"),
            PmfFamily::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
        }
    }
}

impl FromStr for PmfFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| invalid(format!("pmf descriptor {s:?} has no ':'")))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
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
        let real = |i: usize| -> Result<f64> {
            args[i]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| invalid(format!("{name}: {:?} is not a finite number", args[i])))
        };
        let int = |i: usize| -> Result<i64> {
            let x = real(i)?;
            if x.fract() == 0.0 && x.abs() < 9e15 {
                Ok(x as i64)
            } else {
                Err(invalid(format!("{name}: {:?} is not an integer", args[i])))
            }
        };
        let fam = match name.trim() {
            "dgauss" => {
                want(2)?;
                PmfFamily::DiscretizedGaussian {
                    mu: real(0)?,
                    sigma2: real(1)?,
                }
            }
            "geom" => {
                want(1)?;
                PmfFamily::Geometric { q: real(0)? }
            }
            "binom" => {
                want(2)?;
                let n = int(0)?;
                if n < 0 {
                    return Err(invalid("binom: n must be >= 0"));
                }
                PmfFamily::Binomial {
                    n: n as u64,
                    p: real(1)?,
                }
            }
            "poisson" => {
                want(1)?;
                PmfFamily::Poisson { lambda: real(0)? }
            }
            "uniform" => {
                want(2)?;
                PmfFamily::Uniform {
                    a: int(0)?,
                    b: int(1)?,
                }
            }
            other => return Err(invalid(format!("unknown pmf family {other:?}"))),
        };
        fam.validate()?;
        Ok(fam)
    }
}

impl PmfFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PmfFamily::DiscretizedGaussian { mu, sigma2 } => {
                mu.is_finite() && sigma2.is_finite() && sigma2 > 0.0
            }
            PmfFamily::Geometric { q } => q > 0.0 && q < 1.0,
            PmfFamily::Binomial { p, .. } => p > 0.0 && p < 1.0,
            PmfFamily::Poisson { lambda } => lambda.is_finite() && lambda > 0.0,
            PmfFamily::Uniform { a, b } => a <= b,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("parameters out of range in {self}")))
        }
    }
}
