//! Relative entropy to discretized Gaussians and the stability bounds that
//! control it by an entropy deficit.

use serde::{Deserialize, Serialize};

use crate::density::GridDensity;
use crate::discrete::{require_log_concave, IntegerPmf};
use crate::error::Result;
use crate::functionals::{kl_to_matched_gaussian, tao_deficit};
use crate::heat::epi_deficit;
use crate::io::{f64_17, opt_f64_17};
use crate::numeric::{
    kl_integrand, std_normal_cdf, std_normal_interval_mass, std_normal_sf, CompensatedSum,
};

/// Constant multiplying the deficit in the discrete bound.
pub const C1: f64 = 876489.0;
/// Default budget for the `log(sigma)/sigma` term.
pub const DEFAULT_C2: f64 = 1e10;
/// Smallest standard deviation covered by the discrete bound.
pub const SIGMA_GATE: f64 = 1547.0;

/// `D(p || Z)` where `Z` puts `P(k <= Y < k + 1)` on `k` for `Y ~ N(mean p, var p)`.
///
/// Sums the Bregman terms over the support of `p` and adds the Gaussian mass
/// outside it in closed form. A point mass gives `+inf`.
pub fn kl_to_discretized_gaussian(p: &IntegerPmf) -> f64 {
    let var = p.variance();
    if !(var > 0.0) {
        return f64::INFINITY;
    }
    let (mu, s) = (p.mean(), var.sqrt());
    let z = |k: i64| (k as f64 - mu) / s;
    let mut acc = CompensatedSum::new();
    for (j, &pk) in p.probs().iter().enumerate() {
        let k = p.k_min() + j as i64;
        let t = kl_integrand(pk, std_normal_interval_mass(z(k), z(k + 1)));
        if t.is_infinite() {
            return f64::INFINITY;
        }
        acc.add(t);
    }
    acc.add(std_normal_cdf(z(p.k_min())));
    acc.add(std_normal_sf(z(p.k_max() + 1)));
    // sum p - 1, zero up to rounding
    p.probs().iter().for_each(|&x| acc.add(x));
    acc.add(-1.0);
    acc.value().max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteStabilityReport {
    #[serde(with = "f64_17")]
    pub sigma: f64,
    #[serde(with = "f64_17")]
    pub kl_to_dgauss: f64,
    #[serde(with = "f64_17")]
    pub tao_deficit: f64,
    /// `C1 * tao_deficit`.
    #[serde(with = "f64_17")]
    pub c1_term: f64,
    /// Smallest `C2` for which the bound holds, floored at zero.
    #[serde(with = "f64_17")]
    pub required_c2: f64,
    #[serde(with = "f64_17")]
    pub c2_budget: f64,
    pub passes_with_budget: bool,
    /// Set when `sigma < 1547`, where the bound makes no claim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope_warning: Option<String>,
}

impl DiscreteStabilityReport {
    pub fn in_scope(&self) -> bool {
        self.scope_warning.is_none()
    }
}

/// Evaluates `D(X || Z) <= C1 (H(X1 + X2) - H(X) - ln(2)/2) + C2 ln(sigma)/sigma`.
pub fn theorem9_report(p: &IntegerPmf, c2_budget: f64) -> Result<DiscreteStabilityReport> {
    require_log_concave(p)?;
    let sigma = p.std_dev();
    let kl = kl_to_discretized_gaussian(p);
    let deficit = tao_deficit(p);
    let c1_term = C1 * deficit;
    let rate = sigma.ln() / sigma;
    let required_c2 = ((kl - c1_term) / rate).max(0.0);
    Ok(DiscreteStabilityReport {
        sigma,
        kl_to_dgauss: kl,
        tao_deficit: deficit,
        c1_term,
        required_c2,
        c2_budget,
        passes_with_budget: kl <= c1_term + c2_budget * rate,
        scope_warning: (sigma < SIGMA_GATE).then(|| {
            format!("sigma = {sigma:.6} is below {SIGMA_GATE}; the bound makes no claim here")
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStabilityReport {
    #[serde(with = "f64_17")]
    pub variance: f64,
    #[serde(with = "f64_17")]
    pub poincare_upper: f64,
    /// `delta_EPI,1/2(X, X)`.
    #[serde(with = "f64_17")]
    pub deficit_half: f64,
    /// `(2 C_P + 2 sigma^2) / sigma^2 * deficit_half`.
    #[serde(with = "f64_17")]
    pub bbn_bound: f64,
    /// `(2 C_P + sigma^2) / sigma^2 * deficit_half`.
    #[serde(with = "f64_17")]
    pub km_bound: f64,
    /// `D(X || N(mean, variance))`.
    #[serde(with = "f64_17")]
    pub kl_to_gaussian: f64,
    /// `km_bound - kl_to_gaussian`.
    #[serde(with = "f64_17")]
    pub km_slack: f64,
    #[serde(with = "f64_17")]
    pub bbn_slack: f64,
    #[serde(default, with = "opt_f64_17", skip_serializing_if = "Option::is_none")]
    pub tail_mass_dropped: Option<f64>,
}

impl ContinuousStabilityReport {
    pub fn from_parts(
        variance: f64,
        poincare_upper: f64,
        deficit_half: f64,
        kl_to_gaussian: f64,
    ) -> Self {
        let bbn_bound = (2.0 * poincare_upper + 2.0 * variance) / variance * deficit_half;
        let km_bound = (2.0 * poincare_upper + variance) / variance * deficit_half;
        ContinuousStabilityReport {
            variance,
            poincare_upper,
            deficit_half,
            bbn_bound,
            km_bound,
            kl_to_gaussian,
            km_slack: km_bound - kl_to_gaussian,
            bbn_slack: bbn_bound - kl_to_gaussian,
            tail_mass_dropped: None,
        }
    }

    /// The tighter of the two bounds holds within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.km_slack >= -tol
    }
}

/// Both Poincaré-based bounds for a grid density, given an upper bound on `C_P`.
pub fn continuous_stability_report(
    f: &GridDensity,
    poincare_upper: f64,
) -> Result<ContinuousStabilityReport> {
    if !(poincare_upper > 0.0 && poincare_upper.is_finite()) {
        return Err(crate::error::invalid(format!(
            "poincare_upper must be finite and positive, got {poincare_upper}"
        )));
    }
    let kl = kl_to_matched_gaussian(f)?.value;
    let deficit = epi_deficit(f, f, 0.5)?.deficit;
    let mut r = ContinuousStabilityReport::from_parts(f.variance(), poincare_upper, deficit, kl);
    if f.tail_mass() > 0.0 {
        r.tail_mass_dropped = Some(f.tail_mass());
    }
    Ok(r)
}
