use proptest::prelude::*;

use pinns::network::{forward, forward_jet, init, MlpArchitecture};
use pinns::problems::ProblemSpec;
use pinns::quadrature::{self, split_proportional, Geometry};
use pinns::training::{LossEvaluator, LossWeights};

fn boxes() -> impl Strategy<Value = Geometry> {
    prop::collection::vec((-2.0f64..2.0, 0.1f64..3.0), 1..=4).prop_map(|v| {
        let lo: Vec<f64> = v.iter().map(|p| p.0).collect();
        let hi: Vec<f64> = v.iter().map(|p| p.0 + p.1).collect();
        Geometry::rect(lo, hi)
    })
}

fn check_rule(q: &quadrature::QuadratureSet, g: &Geometry, n: usize) -> Result<(), TestCaseError> {
    prop_assert_eq!(q.len(), n);
    prop_assert!((q.total_weight() - g.measure()).abs() <= 1e-9 * g.measure());
    for (x, w) in q.iter() {
        prop_assert!(g.contains(x), "{:?} outside", x);
        prop_assert!(w > 0.0);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rules_weigh_to_the_measure_and_stay_inside(g in boxes(), n in 1usize..300, seed: u64) {
        check_rule(&quadrature::sobol_points(n, &g).unwrap(), &g, n)?;
        check_rule(&quadrature::uniform_random(n, &g, seed), &g, n)?;
        let res: Vec<usize> = (0..g.dim()).map(|i| 1 + (n + i) % 7).collect();
        let m = quadrature::midpoint_grid(&res, &g).unwrap();
        check_rule(&m, &g, res.iter().product())?;
    }

    #[test]
    fn midpoint_integrates_affine_functions_exactly(g in boxes(), k in 1usize..6, a in -3.0f64..3.0) {
        let res = vec![k; g.dim()];
        let q = quadrature::midpoint_grid(&res, &g).unwrap();
        let (lo, hi) = g.bounding_box();
        let exact: f64 = g.measure() * (1.0 + a * lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).sum::<f64>());
        let got = q.integrate_fn(|x| 1.0 + a * x.iter().sum::<f64>());
        prop_assert!((got - exact).abs() <= 1e-9 * (1.0 + exact.abs()));
    }

    #[test]
    fn split_sums_to_n(n in 0usize..100_000, shares in prop::collection::vec(0.01f64..1.0, 1..5)) {
        let parts = split_proportional(n, &shares);
        prop_assert_eq!(parts.iter().sum::<usize>(), n);
        let total: f64 = shares.iter().sum();
        for (p, s) in parts.iter().zip(&shares) {
            prop_assert!((*p as f64 - n as f64 * s / total).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn catalog_counts_sum_to_n(n in 10usize..50_000, k in 0usize..8) {
        let ids = ["poisson", "poisson-noisy", "heat1d", "heat1d-random", "heatnd:3", "wave-gcc", "wave-nogcc", "stokes"];
        let c = ProblemSpec::from_id(ids[k]).unwrap().counts(n);
        prop_assert_eq!(c.total(), n);
    }

    #[test]
    fn jet_value_matches_plain_forward(seed: u64, x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let arch = MlpArchitecture::new(3, 2, 3, 7);
        let theta = init(&arch, seed);
        let plain = forward(&arch, theta.as_slice(), &x);
        let jets = forward_jet::<f64>(&arch, theta.as_slice(), &x);
        for (j, v) in jets.iter().zip(&plain) {
            prop_assert!((j.value - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn loss_is_affine_in_the_weights(seed: u64, lambda in 0.0f64..2.0, lambda_reg in 0.0f64..1e-2, k in 0usize..4) {
        let id = ["poisson", "heat1d", "wave-gcc", "stokes"][k];
        let spec = ProblemSpec::from_id(id).unwrap();
        let sets = spec.build_sets(spec.counts(60), 0).unwrap();
        let arch = MlpArchitecture::new(spec.input_dim(), spec.output_dim(), 2, 6);
        let theta = init(&arch, seed);
        let w = LossWeights { lambda, lambda_reg, q: 2 };
        let terms = LossEvaluator::new(&spec, &sets, &arch, w).unwrap().terms(theta.as_slice());
        let value = LossEvaluator::new(&spec, &sets, &arch, w).unwrap().value(theta.as_slice());
        let expect = terms.data + terms.boundary + lambda * terms.pde + lambda_reg * terms.reg;
        prop_assert!((value - expect).abs() <= 1e-10 * (1.0 + expect));
        prop_assert!((terms.reg - theta.weight_norm_pow(&arch, 2)).abs() <= 1e-10 * (1.0 + terms.reg));
        // E_T leaves the regularizer out
        prop_assert!((terms.e_t(lambda).powi(2) - (expect - lambda_reg * terms.reg)).abs() <= 1e-10 * (1.0 + expect));
    }
}
