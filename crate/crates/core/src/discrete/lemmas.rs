//! Checkable forms of the concentration and exponential-tail bounds for
//! log-concave functions and pmfs.

use std::f64::consts::LN_2;

use serde::Serialize;

use super::logconcave::{build_extension, require_log_concave, LogConcaveProfile, SIGMA_SLACK};
use super::pmf::IntegerPmf;
use crate::error::{invalid, Error, Result};

// absorbs rounding in lgamma-based log-probabilities
const LOG_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationCheck {
    pub bound_holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// Smallest admissible `|x0|` on the side being checked.
    pub threshold: f64,
    pub mu: f64,
}

/// Positive-side threshold `3 int f / f(mu) + max(mu, 0)` and its mirror image.
pub fn concentration_thresholds<F: LogConcaveProfile + ?Sized>(f: &F) -> (f64, f64) {
    let mu = f.barycenter();
    let scale = 3.0 * f.total_integral() / f.value(mu);
    (scale + mu.max(0.0), -(scale + (-mu).max(0.0)))
}

/// Compares `f(x)` with `f(x0) 2^{1 - (x - mu)/(x0 - mu)}`.
///
/// `x0 >= 0` selects the right tail (`x >= x0 >=` positive threshold); `x0 < 0`
/// the mirrored left tail.
pub fn check_concentration_lemma<F: LogConcaveProfile + ?Sized>(
    f: &F,
    x0: f64,
    x: f64,
) -> Result<ConcentrationCheck> {
    if !f.is_log_concave() {
        return Err(Error::NotLogConcave { k: None });
    }
    if !(x0.is_finite() && x.is_finite()) {
        return Err(invalid("x0 and x must be finite"));
    }
    let mu = f.barycenter();
    let (pos, neg) = concentration_thresholds(f);
    let threshold = if x0 >= 0.0 {
        if !(x >= x0 && x0 >= pos) {
            return Err(Error::PreconditionUnmet(format!(
                "need x >= x0 >= {pos}, got x0 = {x0}, x = {x}"
            )));
        }
        pos
    } else {
        if !(x <= x0 && x0 <= neg) {
            return Err(Error::PreconditionUnmet(format!(
                "need x <= x0 <= {neg}, got x0 = {x0}, x = {x}"
            )));
        }
        neg
    };
    let lhs = f.value(x);
    let fx0 = f.value(x0);
    let exponent = 1.0 - (x - mu) / (x0 - mu);
    let rhs = fx0 * exponent.exp2();
    let bound_holds =
        lhs == 0.0 || (fx0 > 0.0 && lhs.ln() <= fx0.ln() + exponent * LN_2 + LOG_SLACK);
    Ok(ConcentrationCheck {
        bound_holds,
        lhs,
        rhs,
        threshold,
        mu,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailLemmaCheck {
    pub m: i64,
    pub k: i64,
    /// Gate `49 sigma + 2 mu_p + 8` (mirrored for the left tail).
    pub threshold: f64,
    pub ln_pm: f64,
    pub ln_pk: f64,
    /// Barycenter of the continuous extension.
    pub mu_constructed: f64,
    pub holds_constructed: bool,
    /// Admissible `|mu|` range `[-B, B]` with `B = 8 + 2|mu_p|`.
    pub mu_bound: f64,
    /// The `mu` in `[-B, B]` that validate the bound, if any.
    pub mu_interval: Option<(f64, f64)>,
    pub bound_holds_for_some_mu: bool,
}

/// Checks `p(k) <= p(m) 2^{1 - (k - mu)/(m - mu)}` for `k >= m` beyond the gate
/// (or the mirrored statement for `k <= m` on the left).
pub fn check_tail_lemma(p: &IntegerPmf, m: i64, k: i64) -> Result<TailLemmaCheck> {
    check_tail_lemma_with(p, |j| p.prob(j).ln(), m, k)
}

/// As [`check_tail_lemma`], reading `ln p(k)` from `ln_prob`.
///
/// Lets far-tail probes use exact log-probabilities where the stored pmf has
/// underflowed to zero. Moments and the extension still come from `p`.
pub fn check_tail_lemma_with<L: Fn(i64) -> f64>(
    p: &IntegerPmf,
    ln_prob: L,
    m: i64,
    k: i64,
) -> Result<TailLemmaCheck> {
    require_log_concave(p)?;
    let sigma = p.std_dev();
    if sigma < 2.0 * (1.0 - SIGMA_SLACK) {
        return Err(Error::PreconditionUnmet(format!(
            "tail bound needs sigma >= 2, got {sigma}"
        )));
    }
    let mu_p = p.mean();
    let right = k >= m && m as f64 >= mu_p;
    let threshold = if right {
        (49.0 * sigma + 2.0 * mu_p + 8.0).ceil()
    } else {
        -(49.0 * sigma - 2.0 * mu_p + 8.0).ceil()
    };
    let in_scope = if right {
        m as f64 >= threshold
    } else {
        k <= m && m as f64 <= threshold
    };
    if !in_scope {
        return Err(Error::PreconditionUnmet(format!(
            "probe (m = {m}, k = {k}) is outside the gate |m| >= {}",
            threshold.abs()
        )));
    }
    let ext = build_extension(p)?;
    let mu_constructed = ext.extension_mean();
    let (ln_pm, ln_pk) = (ln_prob(m), ln_prob(k));
    let holds_at = |mu: f64| {
        if ln_pk == f64::NEG_INFINITY {
            return true;
        }
        let exponent = 1.0 - (k as f64 - mu) / (m as f64 - mu);
        ln_pk <= ln_pm + exponent * LN_2 + LOG_SLACK * ln_pm.abs().max(1.0)
    };
    let mu_bound = 8.0 + 2.0 * mu_p.abs();
    let holds_constructed = holds_at(mu_constructed);
    // D(mu) = (k - m)/(m - mu) must not exceed c = log2(p(m) / p(k))
    let c = if ln_pk == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (ln_pm - ln_pk) / LN_2
    };
    let (lo, hi) = if k == m {
        (-mu_bound, mu_bound)
    } else if right {
        let cap = if c > 0.0 {
            m as f64 - (k - m) as f64 / c
        } else {
            f64::NEG_INFINITY
        };
        (-mu_bound, mu_bound.min(cap).min(m as f64))
    } else {
        let floor = if c > 0.0 {
            m as f64 + (m - k) as f64 / c
        } else {
            f64::INFINITY
        };
        ((-mu_bound).max(floor).max(m as f64), mu_bound)
    };
    let mu_interval = (lo <= hi).then_some((lo, hi));
    Ok(TailLemmaCheck {
        m,
        k,
        threshold,
        ln_pm,
        ln_pk,
        mu_constructed,
        holds_constructed,
        mu_bound,
        mu_interval,
        bound_holds_for_some_mu: mu_interval.is_some(),
    })
}
