use super::*;
use crate::quadrature::integrate_semi_infinite;
use proptest::prelude::*;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn exact_enumeration(dists: &[(f64, Vec<f64>)], stat: &RatioStatistic) -> f64 {
    // dists: (unused, pmf over 0..k) per coordinate
    let mut total = 0.0;
    let sizes: Vec<usize> = dists.iter().map(|d| d.1.len()).collect();
    let mut idx = vec![0usize; dists.len()];
    loop {
        let xs: Vec<f64> = idx.iter().map(|&i| i as f64).collect();
        let p: f64 = idx.iter().zip(dists).map(|(&i, d)| d.1[i]).product();
        total += p * stat.evaluate(&xs).unwrap();
        let mut k = 0;
        loop {
            if k == idx.len() {
                return total;
            }
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn identity_ratios() {
    let dists = [
        DistributionSpec::gamma(0.5, 2.0).unwrap(),
        DistributionSpec::exponential(3.0).unwrap(),
        DistributionSpec::pareto(2.5, 1.0).unwrap(),
        DistributionSpec::lognormal(0.0, 0.8).unwrap(),
        DistributionSpec::inverse_gaussian(1.0, 3.0).unwrap(),
    ];
    let stat = RatioStatistic::new(TKernel::SumPower(1), 1.0, 0.0).unwrap();
    for d in dists {
        for n in [1, 3, 17] {
            let m = expected_ratio_iid(&d, n, &stat, &cfg()).unwrap();
            assert!((m.value - 1.0).abs() < 1e-9, "{d} n={n}: {}", m.value);
            assert!(m.converged);
        }
    }
}

#[test]
fn coordinate_share_is_one_over_n() {
    let g = DistributionSpec::gamma(2.0, 1.0).unwrap();
    let stat = RatioStatistic::new(TKernel::Coordinate(0), 1.0, 0.0).unwrap();
    let m = expected_ratio_iid(&g, 5, &stat, &cfg()).unwrap();
    assert!((m.value - 0.2).abs() < 1e-10);
}

#[test]
fn sum_of_squares_share_matches_dirichlet_moments() {
    // X / S is Dirichlet(1, ..., 1) for exponential observations: E D_i^2 = 2 / (n (n + 1))
    let e = DistributionSpec::exponential(1.0).unwrap();
    let stat = RatioStatistic::new(TKernel::SingleSum(Arc::new(|x| x * x)), 2.0, 0.0).unwrap();
    for n in [2usize, 4, 9] {
        let m = expected_ratio_iid(&e, n, &stat, &cfg()).unwrap();
        let want = n as f64 * 2.0 / (n as f64 * (n as f64 + 1.0));
        assert!((m.value - want).abs() < 1e-10, "n={n}: {}", m.value);
    }
}

#[test]
fn independent_examples() {
    let one = DistributionSpec::point_mass(1.0).unwrap();
    let s = RatioStatistic::new(TKernel::SumPower(1), 1.0, 0.0).unwrap();
    assert!((expected_ratio_independent(&[one, one], &s, &cfg()).unwrap().value - 1.0).abs() < 1e-10);

    let x1 = RatioStatistic::new(TKernel::Coordinate(0), 1.0, 0.0).unwrap();
    let e = DistributionSpec::exponential(1.0).unwrap();
    assert!((expected_ratio_independent(&[e, e], &x1, &cfg()).unwrap().value - 0.5).abs() < 1e-10);

    // X1 / (X1 + X2) is Beta(1, 2) with mean 1/3
    let g1 = DistributionSpec::gamma(1.0, 1.0).unwrap();
    let g2 = DistributionSpec::gamma(2.0, 1.0).unwrap();
    assert!((expected_ratio_independent(&[g1, g2], &x1, &cfg()).unwrap().value - 1.0 / 3.0).abs() < 1e-10);
    let x2 = RatioStatistic::new(TKernel::Coordinate(1), 1.0, 0.0).unwrap();
    assert!((expected_ratio_independent(&[g1, g2], &x2, &cfg()).unwrap().value - 2.0 / 3.0).abs() < 1e-10);

    assert!(matches!(expected_ratio_independent(&[], &s, &cfg()), Err(Error::Config(_))));
}

#[test]
fn sanity_suite_examples() {
    let cases = sanity_identity_suite(&DistributionSpec::gamma(0.5, 1.0).unwrap(), 2, 2, 0.0, 1e-9).unwrap();
    assert!(cases.iter().all(|c| c.pass), "{cases:?}");
    let cases = sanity_identity_suite(&DistributionSpec::pareto(3.0, 1.0).unwrap(), 5, 1, 0.0, 1e-9).unwrap();
    assert!(cases.iter().all(|c| c.pass), "{cases:?}");
    let cases = sanity_identity_suite(&DistributionSpec::poisson(2.0).unwrap(), 3, 1, 0.0, 1e-9).unwrap();
    assert!((cases[0].value - (1.0 - (-6.0f64).exp())).abs() < 1e-9, "{cases:?}");
    assert!(cases.iter().all(|c| c.pass), "{cases:?}");
}

#[test]
fn bernoulli_gini_matches_enumeration() {
    let stat = RatioStatistic::gini(2, 0.0).unwrap();
    let b = DistributionSpec::bernoulli(0.5).unwrap();
    let m = expected_ratio_iid(&b, 2, &stat, &cfg()).unwrap();
    assert!((m.value - 0.5).abs() < 1e-10);
    for (p, n) in [(0.3, 3usize), (0.9, 5)] {
        let b = DistributionSpec::bernoulli(p).unwrap();
        let pmf = (0.0, vec![1.0 - p, p]);
        for r in [0.0, 1.0] {
            let stat = RatioStatistic::gini(n, r).unwrap();
            let want = exact_enumeration(&vec![pmf.clone(); n], &stat);
            let got = expected_ratio_iid(&b, n, &stat, &cfg()).unwrap().value;
            assert!((got - want).abs() < 1e-9, "p={p} n={n} r={r}: {got} vs {want}");
        }
    }
}

#[test]
fn non_identical_discrete_matches_enumeration() {
    let a = DistributionSpec::bernoulli(0.3).unwrap();
    let b = DistributionSpec::bernoulli(0.6).unwrap();
    let c = DistributionSpec::negative_binomial(1.0, 0.5).unwrap();
    let geometric: Vec<f64> = (0..60).map(|k| 0.5f64.powi(k + 1)).collect();
    let pmfs = vec![(0.0, vec![0.7, 0.3]), (0.0, vec![0.4, 0.6]), (0.0, vec![0.4, 0.6]), (0.0, geometric)];
    for stat in [RatioStatistic::gini(4, 0.5).unwrap(), RatioStatistic::scv(4, 0.0).unwrap()] {
        let want = exact_enumeration(&pmfs, &stat);
        let got = expected_ratio_independent(&[a, b, b, c], &stat, &cfg()).unwrap().value;
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn non_identical_continuous_gini_matches_nested_quadrature() {
    let e = DistributionSpec::exponential(1.0).unwrap();
    let g = DistributionSpec::gamma(2.0, 1.0).unwrap();
    let stat = RatioStatistic::gini(2, 0.0).unwrap();
    let got = expected_ratio_independent(&[e, g], &stat, &cfg()).unwrap().value;
    let inner_cfg = QuadratureConfig::default().with_rel_tol(1e-11).with_abs_tol(1e-14);
    let want = integrate_semi_infinite(
        |x| {
            (-x).exp()
                * integrate_semi_infinite(|y| y * (-y).exp() * (x - y).abs() / (x + y), &inner_cfg).unwrap().value
        },
        &inner_cfg,
    )
    .unwrap()
    .value;
    assert!((got - want).abs() < 1e-8, "{got} vs {want}");
}

#[test]
fn squared_statistics_match_enumeration() {
    let p = 0.4;
    let b = DistributionSpec::bernoulli(p).unwrap();
    let pmf = (0.0, vec![1.0 - p, p]);
    for n in [2usize, 3, 5] {
        let sq = RatioStatistic::gini_squared(n, 0.3).unwrap();
        let want = exact_enumeration(&vec![pmf.clone(); n], &sq);
        let got = expected_ratio_iid(&b, n, &sq, &cfg()).unwrap().value;
        assert!((got - want).abs() < 1e-9, "gini^2 n={n}: {got} vs {want}");
        let scv_sq = RatioStatistic::new(TKernel::PairwiseUStat { h: PairKernel::SqDiff, degree: 2 }, 4.0, 0.0).unwrap();
        let want = exact_enumeration(&vec![pmf.clone(); n], &scv_sq);
        let got = expected_ratio_iid(&b, n, &scv_sq, &cfg()).unwrap().value;
        assert!((got - want).abs() < 1e-9 * want.max(1.0), "scv^2 n={n}: {got} vs {want}");
    }
}

#[test]
fn custom_kernels() {
    let pois = DistributionSpec::poisson(1.5).unwrap();
    let h = PairKernel::Custom(Arc::new(|x: f64, y: f64| (x - y).abs()));
    let custom = RatioStatistic::new(TKernel::PairwiseUStat { h, degree: 1 }, 1.0, 0.0).unwrap();
    let plain = RatioStatistic::new(TKernel::PairwiseUStat { h: PairKernel::AbsDiff, degree: 1 }, 1.0, 0.0).unwrap();
    let a = expected_ratio_iid(&pois, 4, &custom, &cfg()).unwrap().value;
    let b = expected_ratio_iid(&pois, 4, &plain, &cfg()).unwrap().value;
    assert!((a - b).abs() < 1e-10);

    let g = DistributionSpec::gamma(2.0, 1.0).unwrap();
    assert!(matches!(expected_ratio_iid(&g, 4, &custom, &cfg()), Err(Error::Capability(_))));

    let first: CustomTilted = Arc::new(|c: &[TiltedComponent<'_>]| c[0].law.mean());
    let k = RatioStatistic::new(TKernel::Custom { tilted: first, sample: None }, 1.0, 0.0).unwrap();
    let v = expected_ratio_independent(&[g, g, g, g], &k, &cfg()).unwrap().value;
    assert!((v - 0.25).abs() < 1e-10);
    assert!(k.evaluate(&[1.0, 2.0]).is_err());
}

#[test]
fn second_degree_needs_identical_laws() {
    let g = DistributionSpec::gamma(2.0, 1.0).unwrap();
    let e = DistributionSpec::exponential(1.0).unwrap();
    let sq = RatioStatistic::gini_squared(2, 0.0).unwrap();
    assert!(matches!(expected_ratio_independent(&[g, e], &sq, &cfg()), Err(Error::Capability(_))));
    // identical laws given as a list group back to the iid path
    let a = expected_ratio_independent(&[g, g, g], &sq, &cfg()).unwrap().value;
    let b = expected_ratio_iid(&g, 3, &sq, &cfg()).unwrap().value;
    assert!((a - b).abs() < 1e-14);
}

#[test]
fn single_observation_pairwise_is_atom_only() {
    let b = DistributionSpec::bernoulli(0.25).unwrap();
    let m = expected_ratio_iid(&b, 1, &RatioStatistic::gini(1, 0.8).unwrap(), &cfg()).unwrap();
    assert!((m.value - 0.8 * 0.75).abs() < 1e-15);
    assert_eq!(m.integral_part, 0.0);
}

#[test]
fn atom_term_shifts_value_exactly() {
    let p = 0.35;
    let n = 4;
    let b = DistributionSpec::bernoulli(p).unwrap();
    let v0 = expected_ratio_iid(&b, n, &RatioStatistic::gini(n, 0.0).unwrap(), &cfg()).unwrap();
    let v1 = expected_ratio_iid(&b, n, &RatioStatistic::gini(n, 0.9).unwrap(), &cfg()).unwrap();
    assert_eq!(v0.integral_part, v1.integral_part);
    assert!((v1.value - v0.value - 0.9 * (1.0 - p).powi(n as i32)).abs() < 1e-15);
}

#[test]
fn dimensionless_statistics_are_scale_invariant() {
    for (a, b) in [
        (DistributionSpec::gamma(1.7, 1.0).unwrap(), DistributionSpec::gamma(1.7, 13.0).unwrap()),
        (DistributionSpec::pareto(2.5, 1.0).unwrap(), DistributionSpec::pareto(2.5, 0.02).unwrap()),
    ] {
        for stat in [RatioStatistic::gini(6, 0.0).unwrap(), RatioStatistic::scv(6, 0.0).unwrap()] {
            let x = expected_ratio_iid(&a, 6, &stat, &cfg()).unwrap().value;
            let y = expected_ratio_iid(&b, 6, &stat, &cfg()).unwrap().value;
            assert!((x - y).abs() < 2e-10 * x.abs().max(1.0), "{a} vs {b}: {x} {y}");
        }
    }
}

#[test]
fn evaluation_count_does_not_grow_with_n() {
    let g = DistributionSpec::gamma(2.0, 1.0).unwrap();
    let counts: Vec<usize> = [2usize, 20, 200]
        .iter()
        .map(|&n| expected_ratio_iid(&g, n, &RatioStatistic::gini(n, 0.0).unwrap(), &cfg()).unwrap().evaluations)
        .collect();
    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    assert!(*hi < 2 * lo, "{counts:?}");
}

#[test]
fn constructor_validation() {
    assert!(RatioStatistic::new(TKernel::SumPower(1), 0.0, 0.0).is_err());
    assert!(RatioStatistic::new(TKernel::SumPower(1), 1.0, -1.0).is_err());
    assert!(RatioStatistic::new(TKernel::PairwiseUStat { h: PairKernel::AbsDiff, degree: 3 }, 1.0, 0.0).is_err());
    assert!(RatioStatistic::new(TKernel::SumPower(0), 1.0, 0.0).is_err());
}

proptest! {
    #[test]
    fn sorted_pairwise_sum_matches_double_loop(xs in prop::collection::vec(0.0f64..100.0, 1..200)) {
        let mut brute = 0.0;
        let mut sq = 0.0;
        for &x in &xs {
            for &y in &xs {
                brute += (x - y).abs();
                sq += (x - y) * (x - y);
            }
        }
        prop_assert!((pairwise_abs_sum(&xs) - brute).abs() <= 1e-9 * brute.max(1.0));
        prop_assert!((pairwise_sq_sum(&xs) - sq).abs() <= 1e-9 * sq.max(1.0));
    }

    #[test]
    fn sup_bounds_hold(xs in prop::collection::vec(0.0f64..10.0, 2..30), r in 0.0f64..2.0) {
        let n = xs.len();
        for stat in [
            RatioStatistic::gini(n, r).unwrap(),
            RatioStatistic::gini_squared(n, r).unwrap(),
            RatioStatistic::scv(n, r).unwrap(),
            RatioStatistic::new(TKernel::SumPower(2), 2.0, r).unwrap(),
            RatioStatistic::new(TKernel::Coordinate(0), 1.0, r).unwrap(),
        ] {
            let v = stat.evaluate(&xs).unwrap();
            prop_assert!(v >= 0.0 && v <= stat.sup_bound(n).unwrap() * (1.0 + 1e-12), "{:?} {}", stat.kernel, v);
        }
    }
}
