mod common;

use causal_precoder::entropy::{
    cost_tensor, differential_entropy, gaussian_entropy, gaussian_pdf, mixture_pdf, mutual_information,
    output_pdf, GridPolicy, Mixture,
};
use causal_precoder::model::{enumerate_symbols, marginals_of, ChannelSpec, JointPmf};
use causal_precoder::quadrature::QuadratureGrid;
use proptest::prelude::*;
use std::f64::consts::LN_2;

fn spec_strategy(max_m: usize, max_q: usize) -> impl Strategy<Value = (ChannelSpec, u64)> {
    (2usize..=max_m, 1usize..=max_q, any::<u64>(), 0.05f64..2.0).prop_map(|(m, q, seed, noise)| {
        let mut rng = common::rng(seed);
        (common::random_spec(&mut rng, m, q, noise), seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn densities_integrate_to_one((spec, seed) in spec_strategy(4, 3)) {
        let grid = GridPolicy::default().grid(&spec).unwrap();
        for t in enumerate_symbols(&spec) {
            let mass = grid.integrate(|y| mixture_pdf(&t, y, &spec).unwrap());
            prop_assert!((mass - 1.0).abs() < 1e-9, "{t}: {mass}");
        }
        let mut rng = common::rng(seed ^ 1);
        let marg = common::random_marginals(&mut rng, spec.m(), spec.q());
        let mass = grid.integrate(|y| output_pdf(&marg, y, &spec).unwrap());
        prop_assert!((mass - 1.0).abs() < 1e-9, "{mass}");
    }

    #[test]
    fn output_density_is_total_probability((spec, seed) in spec_strategy(4, 3), y in -6.0f64..6.0) {
        let mut rng = common::rng(seed);
        let p = JointPmf::new(spec.m(), spec.q(), common::random_pmf(&mut rng, spec.num_symbols())).unwrap();
        let direct: f64 = enumerate_symbols(&spec)
            .iter()
            .map(|t| p.prob(t) * mixture_pdf(t, y, &spec).unwrap())
            .sum();
        let via = output_pdf(&marginals_of(&p, &spec), y, &spec).unwrap();
        prop_assert!((direct - via).abs() < 1e-12, "{direct} vs {via}");
    }

    #[test]
    fn information_is_midpoint_concave((spec, seed) in spec_strategy(3, 2)) {
        let mut rng = common::rng(seed);
        let n = spec.num_symbols();
        let a = common::random_pmf(&mut rng, n);
        let b = common::random_pmf(&mut rng, n);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let mi = |v: Vec<f64>| mutual_information(&JointPmf::new(spec.m(), spec.q(), v).unwrap(), &spec).unwrap();
        let (ia, ib, im) = (mi(a), mi(b), mi(mid));
        prop_assert!(im >= 0.5 * (ia + ib) - 1e-9, "{im} < avg({ia}, {ib})");
    }

    #[test]
    fn more_noise_never_helps((spec, seed) in spec_strategy(3, 2)) {
        let mut rng = common::rng(seed);
        let p = JointPmf::new(spec.m(), spec.q(), common::random_pmf(&mut rng, spec.num_symbols())).unwrap();
        let low = mutual_information(&p, &spec).unwrap();
        let high = mutual_information(&p, &spec.with_noise_power(10.0 * spec.noise_power()).unwrap()).unwrap();
        prop_assert!(high <= low + 1e-9, "{high} > {low}");
        let ceiling = (spec.num_symbols() as f64).log2();
        prop_assert!(low >= -1e-12 && low <= ceiling + 1e-12);
    }
}

#[test]
fn gaussian_entropy_across_noise_levels() {
    for pn in [0.01, 0.1, 1.0, 10.0] {
        let spec = ChannelSpec::new(vec![0.0, 1.0], vec![0.0], vec![1.0], pn).unwrap();
        let grid = GridPolicy::default().grid(&spec).unwrap();
        let h = differential_entropy(|y| gaussian_pdf(y, pn), &grid).unwrap();
        let h_symbol = cost_tensor(&spec, &GridPolicy::default()).unwrap().get(&common::sym(&[1]));
        assert!((h_symbol - h).abs() < 1e-12);
        let exact = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * pn).ln();
        assert!((h - exact).abs() < 1e-9, "P_N={pn}: {h} vs {exact}");
        assert!((gaussian_entropy(pn) - exact).abs() < 1e-15);
    }
}

#[test]
fn uniform_density_has_zero_entropy() {
    let grid = QuadratureGrid::new(0.0, 1.0, 4, 32).unwrap();
    let h = differential_entropy(|y| if (0.0..=1.0).contains(&y) { 1.0 } else { 0.0 }, &grid).unwrap();
    assert!(h.abs() < 1e-6, "{h}");
}

#[test]
fn separated_pair_matches_fine_riemann_sum() {
    let pn = 0.01;
    let spec = common::binary(pn);
    let t = common::sym(&[1, 2]);
    let grid = GridPolicy::default().grid(&spec).unwrap();
    let pdf = |y: f64| mixture_pdf(&t, y, &spec).unwrap();
    let h = differential_entropy(pdf, &grid).unwrap();
    let reference = common::riemann_entropy(pdf, -4.0, 4.0, 2_000_000);
    assert!((h - reference).abs() < 1e-6, "{h} vs riemann {reference}");
    let limit = LN_2 + gaussian_entropy(pn);
    assert!((h - limit).abs() < 1e-6, "{h} vs {limit}");
}

#[test]
fn binary_cost_tensor_symmetries() {
    for pn in [0.01, 0.1, 1.0, 3.0] {
        let spec = common::binary(pn);
        let h = cost_tensor(&spec, &GridPolicy::default()).unwrap();
        let [h11, h12, h21, h22] = [[1, 1], [1, 2], [2, 1], [2, 2]].map(|ix| h.get(&common::sym(&ix)));
        assert!((h11 - h22).abs() < 1e-9, "{h11} vs {h22}");
        // (2,1) lands both states on 0: a single Gaussian
        assert!((h21 - gaussian_entropy(pn)).abs() < 1e-9);
        let grid = GridPolicy::default().grid(&spec).unwrap();
        let expect = common::riemann_entropy(
            |y| 0.5 * gaussian_pdf(y + 2.0, pn) + 0.5 * gaussian_pdf(y - 2.0, pn),
            grid.lo(),
            grid.hi(),
            400_000,
        );
        assert!((h12 - expect).abs() < 1e-6, "{h12} vs {expect}");
    }
}

#[test]
fn exchange_symmetric_states_give_equal_costs() {
    // equal probabilities and levels symmetric about 0 with a symmetric constellation
    let spec = ChannelSpec::new(vec![-1.0, 0.0, 1.0], vec![-0.5, 0.5], vec![0.5, 0.5], 0.2).unwrap();
    let h = cost_tensor(&spec, &GridPolicy::default()).unwrap();
    for t in enumerate_symbols(&spec) {
        // mirror y -> -y maps x_i + s_j to x_{4-i} + s_{3-j}
        let mirrored = common::sym(&[4 - t.index(2), 4 - t.index(1)]);
        assert!((h.get(&t) - h.get(&mirrored)).abs() < 1e-9, "{t} vs {mirrored}");
    }
}

#[test]
fn binary_output_density_expands_by_hand() {
    let pn = 0.3;
    let spec = common::binary(pn);
    let marg = causal_precoder::MarginalSet::uniform(2, 2);
    for y in [-2.5, -1.0, 0.0, 0.7, 2.0] {
        let expect = 0.25 * (gaussian_pdf(y + 2.0, pn) + 2.0 * gaussian_pdf(y, pn) + gaussian_pdf(y - 2.0, pn));
        assert!((output_pdf(&marg, y, &spec).unwrap() - expect).abs() < 1e-15);
    }
    let m = Mixture::for_marginals(&marg, &spec).unwrap();
    for y in [-2.0, 0.1, 3.0] {
        assert!((m.ln_pdf(y) - m.pdf(y).ln()).abs() < 1e-12);
    }
}

#[test]
fn high_snr_pair_code_approaches_one_bit() {
    let spec = common::binary(0.01);
    let p = JointPmf::uniform_over(&[common::sym(&[1, 2]), common::sym(&[2, 1])], 2);
    let mi = mutual_information(&p, &spec).unwrap();
    assert!(mi > 0.999 && mi <= 1.0 + 1e-9, "{mi}");
    let point = JointPmf::point_mass(&common::sym(&[1, 2]), 2);
    assert!(mutual_information(&point, &spec).unwrap().abs() < 1e-9);
}
