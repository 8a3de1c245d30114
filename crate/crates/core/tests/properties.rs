use epi_lab_core::density::{convolve_sequences, ConvolutionMethod};
use epi_lab_core::discrete::*;
use epi_lab_core::isoperimetry::{cheeger_poincare_upper, default_family};
use epi_lab_core::*;
use proptest::prelude::*;

fn mixture() -> impl Strategy<Value = AnalyticDensity> {
    prop::collection::vec((0.1f64..1.0, -3.0f64..3.0, 0.2f64..2.0), 1..=3).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let weights = parts.iter().map(|p| p.0 / total).collect();
        let comps = parts.iter().map(|p| Gaussian::new(p.1, p.2)).collect();
        AnalyticDensity::mixture(weights, comps).unwrap()
    })
}

fn grid_of(d: &AnalyticDensity, n: usize) -> GridDensity {
    render(d, (-16.0, 16.0), n).unwrap()
}

fn log_concave_family() -> impl Strategy<Value = PmfFamily> {
    prop_oneof![
        (-5.0f64..5.0, 4.0f64..400.0)
            .prop_map(|(mu, sigma2)| PmfFamily::DiscretizedGaussian { mu, sigma2 }),
        (0.5f64..0.97).prop_map(|q| PmfFamily::Geometric { q }),
        (20u64..2000, 0.1f64..0.9).prop_map(|(n, p)| PmfFamily::Binomial { n, p }),
        (4.0f64..500.0).prop_map(|lambda| PmfFamily::Poisson { lambda }),
        (-10i64..10, 7i64..200).prop_map(|(a, w)| PmfFamily::Uniform { a, b: a + w }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolution_is_symmetric_and_normalized(a in mixture(), b in mixture()) {
        let (f, g) = (grid_of(&a, 1024), grid_of(&b, 1024));
        let fg = convolve(&f, &g).unwrap();
        let gf = convolve(&g, &f).unwrap();
        prop_assert_eq!(fg.values(), gf.values());
        prop_assert_eq!(fg.grid_start(), gf.grid_start());
        prop_assert!((fg.mass() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn convolution_adds_variances(a in mixture(), b in mixture()) {
        let (f, g) = (grid_of(&a, 4096), grid_of(&b, 4096));
        let v = convolve(&f, &g).unwrap().variance();
        let expected = f.variance() + g.variance();
        prop_assert!(((v - expected) / expected).abs() <= 1e-4);
    }

    #[test]
    fn direct_and_fft_sequences_agree(a in prop::collection::vec(0.0f64..1.0, 1..256),
                                      b in prop::collection::vec(0.0f64..1.0, 1..256)) {
        let d = convolve_sequences(&a, &b, ConvolutionMethod::Direct);
        let f = convolve_sequences(&a, &b, ConvolutionMethod::Fft);
        let peak = d.iter().cloned().fold(0.0, f64::max);
        for (x, y) in d.iter().zip(&f) {
            prop_assert!((x - y).abs() <= 1e-12 * peak.max(1.0));
        }
    }

    #[test]
    fn levy_is_symmetric_and_bounded(a in mixture(), b in mixture()) {
        let fa = DistributionFunction::from_analytic(&a).unwrap();
        let fb = DistributionFunction::from_analytic(&b).unwrap();
        let grid = LevyGrid::covering(&fa, &fb, 2001);
        let ab = levy_distance(&fa, &fb, &grid).unwrap();
        let ba = levy_distance(&fb, &fa, &grid).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(levy_distance(&fa, &fa, &grid).unwrap(), 0.0);
    }

    #[test]
    fn gibbs_and_maximum_entropy(a in mixture(), b in mixture()) {
        let (f, g) = (grid_of(&a, 4096), grid_of(&b, 4096));
        prop_assert!(relative_entropy(&f, &g).unwrap().value >= 0.0);
        prop_assert_eq!(relative_entropy(&f, &f).unwrap().value, 0.0);
        let h = differential_entropy(&f).unwrap().value;
        let bound = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * f.variance()).ln();
        prop_assert!(h <= bound + 1e-4);
    }

    #[test]
    fn cramer_rao(a in mixture()) {
        let f = grid_of(&a, 4096);
        let i = fisher_information(&f).unwrap().value;
        prop_assert!(i * f.variance() >= 1.0 - 1e-3);
    }

    #[test]
    fn affine_maps_shift_entropy_by_log_scale(scale in 0.05f64..20.0, shift in -5.0f64..5.0, neg in any::<bool>()) {
        let a = if neg { -scale } else { scale };
        for d in [
            AnalyticDensity::gaussian(0.3, 2.0).unwrap(),
            AnalyticDensity::cauchy(-1.0, 0.7).unwrap(),
            AnalyticDensity::uniform(0.0, 3.0).unwrap(),
        ] {
            let t = d.affine(a, shift).unwrap();
            let (h0, h1) = (d.entropy().unwrap(), t.entropy().unwrap());
            prop_assert!((h1 - h0 - scale.ln()).abs() <= 1e-12 * h0.abs().max(1.0));
        }
        let e = AnalyticDensity::exponential(1.5).unwrap();
        let he = e.affine(scale, 0.0).unwrap().entropy().unwrap();
        prop_assert!((he - e.entropy().unwrap() - scale.ln()).abs() <= 1e-12);
        for d in [AnalyticDensity::gaussian(0.3, 2.0).unwrap(), AnalyticDensity::cauchy(-1.0, 0.7).unwrap()] {
            let (i0, i1) = (d.fisher().unwrap(), d.affine(a, shift).unwrap().fisher().unwrap());
            prop_assert!((i1 * a * a / i0 - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn grid_scaling_is_exact(a in mixture(), c in 0.1f64..10.0) {
        let f = grid_of(&a, 2048);
        let h = differential_entropy(&f).unwrap().value;
        let hs = differential_entropy(&f.scaled(c).unwrap()).unwrap().value;
        prop_assert!((hs - h - c.ln()).abs() <= 1e-12);
    }

    #[test]
    fn refinement_gap_bounds_the_change(a in mixture()) {
        let coarse = grid_of(&a, 1025);
        let fine = grid_of(&a, 2049);
        let ec = differential_entropy(&coarse).unwrap();
        let ef = differential_entropy(&fine).unwrap();
        prop_assert!((ef.value - ec.value).abs() <= 4.0 * ec.refinement_gap + 1e-12);
    }

    #[test]
    fn epi_deficit_is_non_negative(a in mixture(), b in mixture(), l in prop::sample::select(vec![0.1, 0.5, 0.9])) {
        let d = epi_deficit(&grid_of(&a, 2048), &grid_of(&b, 2048), l).unwrap();
        prop_assert!(d.deficit >= -1e-6, "{}", d.deficit);
    }

    #[test]
    fn unequal_gaussians_have_visible_deficit(v in 0.3f64..3.0, ratio in 1.5f64..10.0) {
        let w = 12.0 * (v * ratio).sqrt();
        let f = render(&AnalyticDensity::gaussian(0.0, v).unwrap(), (-w, w), 8192).unwrap();
        let g = render(&AnalyticDensity::gaussian(0.0, v * ratio).unwrap(), (-w, w), 8192).unwrap();
        prop_assert!(epi_deficit(&f, &g, 0.5).unwrap().deficit > 1e-3);
    }

    #[test]
    fn stam_inequality(a in mixture(), b in mixture()) {
        let (f, g) = (grid_of(&a, 4096), grid_of(&b, 4096));
        let i = |d: &GridDensity| fisher_information(d).unwrap().value;
        let lhs = 1.0 / i(&convolve(&f, &g).unwrap());
        prop_assert!(lhs >= 1.0 / i(&f) + 1.0 / i(&g) - 1e-6);
    }

    #[test]
    fn grid_json_round_trip(values in prop::collection::vec(0.0f64..10.0, 8..64), start in -10.0f64..10.0, step in 1e-3f64..1.0) {
        prop_assume!(values.iter().any(|&v| v > 0.0));
        let g = GridDensity::new(start, step, values).unwrap();
        let back: GridDensity = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn self_convolution_keeps_log_concavity(fam in log_concave_family()) {
        let p = fam.pmf().unwrap();
        prop_assert!(check_log_concave(&p).is_log_concave);
        prop_assert!(check_log_concave(&self_convolve(&p)).is_log_concave);
    }

    #[test]
    fn entropy_grows_under_self_convolution(probs in prop::collection::vec(0.0f64..1.0, 1..40)) {
        prop_assume!(probs.iter().any(|&v| v > 0.0));
        let p = IntegerPmf::new(0, probs).unwrap();
        prop_assert!(discrete_entropy(&self_convolve(&p)) >= discrete_entropy(&p) - 1e-12);
    }

    #[test]
    fn extension_is_exact_and_integrates_near_one(fam in log_concave_family()) {
        let p = fam.pmf().unwrap();
        let f = build_extension(&p).unwrap();
        let (lo, hi) = p.trimmed().positive_range();
        for k in lo..=hi {
            prop_assert_eq!(f.eval(k as f64), p.prob(k));
        }
        let total: f64 = p.probs().iter().sum();
        prop_assert!((f.total_integral() - total).abs() <= p.max_prob().1 * (1.0 + 1e-12));
    }

    #[test]
    fn max_pmf_sandwich(fam in log_concave_family()) {
        let p = fam.pmf().unwrap();
        prop_assume!(p.std_dev() >= 2.0);
        prop_assert!(maxpmf_bounds(&p).unwrap().within);
    }

    #[test]
    fn concentration_bound_on_extensions(fam in log_concave_family(), u in 0.0f64..1.0, v in 0.0f64..3.0, right in any::<bool>()) {
        let f = build_extension(&fam.pmf().unwrap()).unwrap();
        let (pos, neg) = concentration_thresholds(&f);
        let (lo, hi) = f.support();
        let (x0, x) = if right {
            let x0 = pos + u * (hi - pos).max(0.0);
            (x0, x0 + v * (hi - x0).max(0.0))
        } else {
            let x0 = neg - u * (neg - lo).max(0.0);
            (x0, x0 - v * (x0 - lo).max(0.0))
        };
        prop_assume!(if right { x0 >= 0.0 } else { x0 < 0.0 });
        let c = check_concentration_lemma(&f, x0, x).unwrap();
        prop_assert!(c.bound_holds, "{c:?}");
    }

    #[test]
    fn isoperimetry_sandwich_and_translation(fam in log_concave_family(), shift in -50i64..50) {
        let p = fam.pmf().unwrap();
        let d = smooth_with_uniform(&p);
        let (is, _, _) = isoperimetric_constant(&d).unwrap();
        let (lower, _) = rayleigh_lower_bound(&d, &default_family(&d)).unwrap();
        prop_assert!(lower <= cheeger_poincare_upper(is) + 1e-9);
        let (is_shifted, _, _) = isoperimetric_constant(&smooth_with_uniform(&p.shifted(shift))).unwrap();
        prop_assert_eq!(is, is_shifted);
    }

    #[test]
    fn prop10_budget_and_chain(fam in log_concave_family()) {
        let p = fam.pmf().unwrap();
        prop_assume!(p.variance() >= 4.0);
        let c = verify_prop10(&p).unwrap();
        prop_assert!(c.passes && c.chain_holds, "{c:?}");
    }

    #[test]
    fn pmf_json_round_trip(fam in log_concave_family()) {
        let p = fam.pmf().unwrap();
        let back: IntegerPmf = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back.probs(), p.probs());
        prop_assert_eq!(back.k_min(), p.k_min());
    }
}
