//! Summation, quadrature and special-function helpers shared by every module.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Trapezoid rule on a uniform grid: `step * (sum - (first + last) / 2)`.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let mut acc = CompensatedSum::new();
            acc.add(0.5 * values[0]);
            for &v in &values[1..n - 1] {
                acc.add(v);
            }
            acc.add(0.5 * values[n - 1]);
            acc.value() * step
        }
    }
}

/// Trapezoid rule applied to `integrand(i, value_i)` without materializing it.
pub fn trapezoid_map<F: Fn(usize, f64) -> f64>(values: &[f64], step: f64, integrand: F) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    for (i, &v) in values.iter().enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc.add(w * integrand(i, v));
    }
    acc.value() * step
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..order {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            dp = n * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre quadrature with `panels` equal panels of `order` nodes.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = CompensatedSum::new();
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(&weights) {
            acc.add(w * f(mid + 0.5 * h * x));
        }
    }
    acc.value() * 0.5 * h
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal upper tail `1 - Phi(z)`, accurate deep in the tail.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// `ln(1 - Phi(z))`, finite for every finite `z`.
pub fn ln_std_normal_sf(z: f64) -> f64 {
    if z < 35.0 {
        return std_normal_sf(z).ln();
    }
    // Mills-ratio asymptotic series
    let z2 = z * z;
    let series =
        1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
    -0.5 * z2 - z.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// `z` such that `1 - Phi(z) = tail`, for `tail` in `(0, 1)`.
pub fn std_normal_upper_quantile(tail: f64) -> f64 {
    assert!(
        tail > 0.0 && tail < 1.0,
        "tail probability {tail} outside (0, 1)"
    );
    if tail > 0.5 {
        return -std_normal_upper_quantile(1.0 - tail);
    }
    if tail == 0.5 {
        return 0.0;
    }
    // rational starting point, then Newton on ln(1 - Phi)
    let t = (-2.0 * tail.ln()).sqrt();
    let mut z = t
        - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
            / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);
    let target = tail.ln();
    for _ in 0..50 {
        let ln_sf = ln_std_normal_sf(z);
        let dz = (ln_sf - target) * (ln_sf - std_normal_pdf(z).ln()).exp();
        z += dz;
        if dz.abs() <= 1e-15 * z.abs().max(1.0) {
            break;
        }
    }
    z
}

/// `Phi(b) - Phi(a)` for `a <= b`, computed from whichever tail avoids cancellation.
pub fn std_normal_interval_mass(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a >= 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else if b <= 0.0 {
        std_normal_sf(-b) - std_normal_sf(-a)
    } else {
        1.0 - std_normal_sf(-a) - std_normal_sf(b)
    }
}

/// `ln(Phi(b) - Phi(a))`, finite even where the mass underflows.
pub fn ln_std_normal_interval_mass(a: f64, b: f64) -> f64 {
    debug_assert!(a < b);
    let (lo, hi) = if a >= 0.0 {
        (a, b)
    } else if b <= 0.0 {
        (-b, -a)
    } else {
        return std_normal_interval_mass(a, b).ln();
    };
    let direct = std_normal_interval_mass(a, b);
    if direct > 1e-280 {
        return direct.ln();
    }
    let l_lo = ln_std_normal_sf(lo);
    let l_hi = ln_std_normal_sf(hi);
    l_lo + (-(l_hi - l_lo).exp_m1()).ln()
}

/// `-x ln x` with the convention `0 ln 0 = 0`.
#[inline]
pub fn neg_xlogx(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

/// `(1 + u) ln(1 + u) - u`, accurate for small `u`.
pub fn one_plus_u_log_minus_u(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        // sum_{n>=2} (-1)^n u^n / (n (n - 1))
        let mut term = u * u;
        let mut acc = 0.0;
        for n in 2..9 {
            let nf = n as f64;
            acc += term / (nf * (nf - 1.0));
            term *= -u;
        }
        acc
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

/// Pointwise Bregman integrand `f ln(f/g) - f + g` of the relative entropy.
///
/// Nonnegative for every admissible pair; `+inf` when `g = 0 < f`.
#[inline]
pub fn kl_integrand(f: f64, g: f64) -> f64 {
    if f <= 0.0 {
        g.max(0.0)
    } else if g <= 0.0 {
        f64::INFINITY
    } else {
        let u = (f - g) / g;
        if u.abs() < 0.5 {
            g * one_plus_u_log_minus_u(u)
        } else {
            f * (f.ln() - g.ln()) - f + g
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let sum_w: f64 = w.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
        // x^14 has integral 2/15 over [-1, 1]
        let i14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i14 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn normal_tail_helpers_agree() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-16);
        let m = std_normal_interval_mass(-1.0, 1.0);
        assert!((m - 0.682_689_492_137_085_9).abs() < 1e-15);
        // continuity of the log-tail across the series switch
        let a = ln_std_normal_sf(34.999_999);
        let b = ln_std_normal_sf(35.000_001);
        assert!((a - b).abs() < 1e-4);
        assert!((std_normal_upper_quantile(0.025) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((std_normal_upper_quantile(0.975) + 1.959_963_984_540_054).abs() < 1e-12);
        for tail in [0.3, 1e-5, 5e-13, 1e-300] {
            let z = std_normal_upper_quantile(tail);
            assert!((ln_std_normal_sf(z) - tail.ln()).abs() < 1e-12, "{tail}");
        }
    }

    #[test]
    fn log_interval_mass_deep_tail() {
        let direct = std_normal_interval_mass(10.0, 10.1).ln();
        assert!((ln_std_normal_interval_mass(10.0, 10.1) - direct).abs() < 1e-10);
        let far = ln_std_normal_interval_mass(60.0, 60.5);
        assert!(far.is_finite() && far < -1790.0);
    }

    #[test]
    fn bregman_integrand_small_and_large_ratio() {
        assert_eq!(kl_integrand(0.3, 0.3), 0.0);
        let u = 1e-6;
        let expected = u * u / 2.0 - u * u * u / 6.0;
        assert!((one_plus_u_log_minus_u(u) - expected).abs() < 1e-25);
        assert!((kl_integrand(2.0, 1.0) - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert_eq!(kl_integrand(0.0, 0.5), 0.5);
        assert!(kl_integrand(0.1, 0.0).is_infinite());
        // ratio far below the resolution of 1 + u
        let t = kl_integrand(1e-87, 1e-44);
        assert!((t - (1e-44 - 1e-87 + 1e-87 * (1e-87f64.ln() - 1e-44f64.ln()))).abs() < 1e-58);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(v) - 2e-16).abs() < 1e-30);
    }
}
