//! Closed-form oracles for the continuous side: smoothing, de Bruijn, deficits,
//! the perturbation trajectory and the weak-stability table.

use std::f64::consts::{E, PI};

use epi_lab_core::heat::{default_t_grid, mixture_kl_to_standard};
use epi_lab_core::*;

fn gauss(mean: f64, var: f64, window: f64, n: usize) -> GridDensity {
    let d = AnalyticDensity::gaussian(mean, var).unwrap();
    render(&d, (mean - window, mean + window), n).unwrap()
}

fn gaussian_entropy(var: f64) -> f64 {
    0.5 * (2.0 * PI * E * var).ln()
}

#[test]
fn heat_residual_example() {
    // N(0,1), t = 0.5, dt = 1e-3, step 5e-3
    let f = gauss(0.0, 1.0, 12.0, 4801);
    assert!((f.grid_step() - 5e-3).abs() < 1e-15);
    let r = heat_equation_residual(&f, 0.5, 1e-3).unwrap();
    assert!(r <= 1e-4, "{r}");
}

#[test]
fn debruijn_terms_match_gaussian_closed_form() {
    // h(N(0, 1 + t)) has derivative 1/(2(1 + t)) = I/2
    let f = gauss(0.0, 1.0, 12.0, 1 << 14);
    for t in [0.1, 0.5, 2.0] {
        let r = debruijn_residual(&f, t, 1e-4).unwrap();
        let exact = 0.5 / (1.0 + t);
        assert!((r.entropy_derivative - exact).abs() < 1e-6, "t = {t}");
        assert!((0.5 * r.fisher - exact).abs() < 1e-9, "t = {t}");
        assert!((r.h_plus - gaussian_entropy(1.0 + t + 1e-4)).abs() < 1e-10);
    }
}

#[test]
fn smoothed_fisher_is_bounded_by_one_over_t() {
    let u = render(
        &AnalyticDensity::uniform(0.0, 1.0).unwrap(),
        (-0.5, 1.5),
        8001,
    )
    .unwrap();
    let ts: Vec<f64> = (0..8).map(|k| 0.2 * 0.5f64.powi(k)).collect();
    let rows = debruijn_zero_limit(&u, &ts).unwrap();
    for r in &rows {
        assert!(2.0 * r.half_fisher <= 1.0 / r.t + 1e-6, "t = {}", r.t);
        assert!(r.entropy_change > 0.0);
    }
    assert!(rows
        .windows(2)
        .all(|w| w[1].entropy_change < w[0].entropy_change));
}

#[test]
fn perturbed_gaussian_variance() {
    // sqrt(t) N(0, 4) + sqrt(1 - t) Z has variance 1 + 3t
    let f = gauss(0.0, 4.0, 24.0, 8193);
    for t in [0.01, 0.3, 0.9] {
        let p = perturb(&f, t).unwrap();
        assert!((p.variance() - (1.0 + 3.0 * t)).abs() < 1e-9, "t = {t}");
    }
    let z = perturb(&f, 0.0).unwrap();
    assert!((z.variance() - 1.0).abs() < 1e-12);
    assert!(matches!(perturb(&f, -0.1), Err(Error::InvalidParameter(_))));
}

#[test]
fn deficit_examples() {
    let n1 = gauss(0.0, 1.0, 12.0, 1 << 13);
    let n4 = gauss(0.0, 4.0, 24.0, 1 << 14);
    let r = epi_deficit(&n1, &n4, 0.5).unwrap();
    assert!((r.deficit - 0.5 * 1.25f64.ln()).abs() < 1e-8);

    // equal Gaussians with unequal lambda: the two scaled grids need resampling
    let r = epi_deficit(&n1, &n1, 0.3).unwrap();
    assert!(r.deficit.abs() < 1e-8, "{}", r.deficit);

    let u = render(
        &AnalyticDensity::uniform(0.0, 1.0).unwrap(),
        (-0.5, 1.5),
        4001,
    )
    .unwrap();
    assert!(epi_deficit(&u, &u, 0.5).unwrap().deficit > 0.0);
    assert!(matches!(
        epi_deficit(&u, &u, 1.0),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn uniform_pair_deficit_is_triangle_entropy() {
    // (U1 + U2)/sqrt 2 has entropy 1/2 - ln(2)/2
    let u = render(
        &AnalyticDensity::uniform(0.0, 1.0).unwrap(),
        (-0.25, 1.25),
        6001,
    )
    .unwrap();
    let r = epi_deficit(&u, &u, 0.5).unwrap();
    assert!(
        (r.deficit - (0.5 - 0.5 * 2f64.ln())).abs() < 1e-3,
        "{}",
        r.deficit
    );
}

#[test]
fn submodularity_gaussian_value() {
    let f = gauss(0.0, 1.0, 12.0, 4097);
    let gap = submodularity_gap(&f, &f, &f).unwrap();
    assert!((gap - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-5, "{gap}");
}

#[test]
fn gaussian_trajectory_matches_closed_form() {
    // X ~ N(0,1), Y ~ N(0,4), lambda = 1/2:
    // Delta(t) = ln(1 + 1.5t)/2 - ln(1 + 3t)/4
    let x = gauss(0.0, 1.0, 12.0, 4096);
    let y = gauss(0.0, 4.0, 24.0, 8192);
    let tr = deficit_monotonicity(&x, &y, 0.5, &default_t_grid()).unwrap();
    for (i, &t) in tr.times.iter().enumerate() {
        let exact = 0.5 * (1.0 + 1.5 * t).ln() - 0.25 * (1.0 + 3.0 * t).ln();
        let slope = 0.75 / (1.0 + 1.5 * t) - 0.75 / (1.0 + 3.0 * t);
        assert!((tr.delta[i] - exact).abs() < 1e-8, "t = {t}");
        assert!((tr.delta_prime_formula[i] - slope).abs() < 1e-6, "t = {t}");
    }
    assert!((tr.deficit_at_one - 0.5 * 1.25f64.ln()).abs() < 1e-8);
    let c = tr.checks();
    assert!(c.passes, "{c:?}");
}

#[test]
fn trajectory_csv_has_one_row_per_time() {
    let x = gauss(0.0, 1.0, 12.0, 2048);
    let t_grid = [0.25, 0.5, 1.0];
    let tr = deficit_monotonicity(&x, &x, 0.5, &t_grid).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text
        .lines()
        .nth(3)
        .unwrap()
        .starts_with("1.0000000000000000e0,"));
    assert!(!tr.interior[2] && tr.interior[0]);
}

#[test]
fn weak_demo_matches_grid_deficit() {
    let rows = weak_stability_demo(&[0.4]).unwrap();
    let x = AnalyticDensity::symmetric_unit_mixture(0.4).unwrap();
    let g = render(&x, (-12.0, 12.0), 1 << 14).unwrap();
    let grid = epi_deficit(&g, &g, 0.5).unwrap().deficit;
    assert!(
        (rows[0].deficit - grid).abs() < 1e-9,
        "{} {grid}",
        rows[0].deficit
    );
}

#[test]
fn weak_demo_small_offset_asymptotics() {
    // fourth cumulant -2a^4 gives D(X_a) ~ a^8/12 and a deficit ~ a^8/16
    let a: f64 = 0.05;
    let rows = weak_stability_demo(&[a, 0.0]).unwrap();
    let rel = |v: f64, e: f64| ((v - e) / e).abs();
    assert!(rel(rows[0].kl_to_gaussian, a.powi(8) / 12.0) < 0.02);
    assert!(rel(rows[0].deficit, a.powi(8) / 16.0) < 0.02);
    assert_eq!((rows[1].deficit, rows[1].levy_to_gaussian), (0.0, 0.0));
}

#[test]
fn mixture_kl_against_grid_relative_entropy() {
    // standardize, then compare the quadrature with the grid estimate
    let y = AnalyticDensity::two_component(0.3, -1.0, 0.6, 1.0, 0.6).unwrap();
    let (m, v) = (y.mean().unwrap(), y.variance().unwrap());
    let s = v.sqrt();
    let quad = mixture_kl_to_standard(&[0.3, 0.7], &[(-1.0 - m) / s, (1.0 - m) / s], 0.6 / v);
    let grid = render(&y, (-14.0, 14.0), 1 << 14).unwrap();
    let num = functionals::kl_to_matched_gaussian(&grid).unwrap().value;
    assert!((quad - num).abs() < 1e-10, "{quad} {num}");
}

#[test]
fn continuous_stability_examples() {
    let n = gauss(0.0, 1.0, 12.0, 1 << 13);
    let r = continuous_stability_report(&n, 1.0).unwrap();
    assert!(r.kl_to_gaussian.abs() < 1e-8 && r.deficit_half.abs() < 1e-8);
    assert!(r.holds(1e-5));

    let u = render(
        &AnalyticDensity::uniform(0.0, 1.0).unwrap(),
        (-0.25, 1.25),
        6001,
    )
    .unwrap();
    let r = continuous_stability_report(&u, 1.0 / (PI * PI)).unwrap();
    let d_uniform = 0.5 * (2.0 * PI * E / 12.0).ln();
    assert!((r.kl_to_gaussian - d_uniform).abs() < 1e-3);
    assert!(r.holds(1e-5) && r.bbn_slack >= r.km_slack);
    assert!(matches!(
        continuous_stability_report(&u, 0.0),
        Err(Error::InvalidParameter(_))
    ));
}
