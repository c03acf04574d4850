mod common;

use causal_precoder::entropy::{cost_tensor, mutual_information, GridPolicy};
use causal_precoder::model::{marginals_of, JointPmf, MarginalSet, SUPPORT_THRESHOLD};
use causal_precoder::optimize::{
    blahut_arimoto, solve_marginal_lp, solve_uniform_lp, support_bound, support_reduce, uniform_transmission,
    BaConfig,
};
use rand::Rng;

fn assert_feasible(p: &JointPmf, targets: &MarginalSet) {
    let m = targets.m();
    let q = targets.q();
    let mut got = vec![vec![0.0; m]; q];
    for (r, &v) in p.probs().iter().enumerate() {
        assert!(v >= -1e-12, "negative entry {v}");
        let t = causal_precoder::AssociatedSymbol::from_rank(r, m, q);
        for s in 0..q {
            got[s][t.indices()[s] - 1] += v;
        }
    }
    for (g, want) in got.iter().zip(targets.rows()) {
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-8, "marginal {a} vs {b}");
        }
    }
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = common::rng(7);
    for (m, q) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        for _ in 0..8 {
            let costs = common::random_costs(&mut rng, m, q);
            let targets = if rng.random_bool(0.5) {
                MarginalSet::uniform(m, q)
            } else {
                common::random_marginals(&mut rng, m, q)
            };
            let lp = solve_marginal_lp(&costs, &targets).unwrap();
            let oracle = common::vertex_enumeration_min(&costs, &targets);
            assert!((lp.objective - oracle).abs() < 1e-9, "M={m} Q={q}: {} vs {oracle}", lp.objective);
        }
    }
}

#[test]
fn simplex_beats_random_feasible_points() {
    let mut rng = common::rng(11);
    for (m, q) in [(2, 2), (3, 2), (3, 3), (4, 2), (4, 3), (2, 4)] {
        let costs = common::random_costs(&mut rng, m, q);
        let targets = common::random_marginals(&mut rng, m, q);
        let lp = solve_marginal_lp(&costs, &targets).unwrap();
        assert_feasible(&lp.pmf, &targets);
        assert!(lp.pmf.support_size() <= support_bound(m, q));
        for _ in 0..1000 {
            let p = common::random_feasible_point(&mut rng, &targets);
            let obj: f64 = p.iter().zip(costs.values()).map(|(a, b)| a * b).sum();
            assert!(lp.objective <= obj + 1e-12, "{} > {obj}", lp.objective);
        }
    }
}

#[test]
fn random_fills_are_feasible() {
    let mut rng = common::rng(12);
    let targets = common::random_marginals(&mut rng, 4, 3);
    let p = JointPmf::new(4, 3, common::random_feasible_point(&mut rng, &targets)).unwrap();
    assert_feasible(&p, &targets);
}

#[test]
fn single_state_is_fully_determined() {
    let mut rng = common::rng(3);
    let costs = common::random_costs(&mut rng, 4, 1);
    let targets = common::random_marginals(&mut rng, 4, 1);
    let lp = solve_marginal_lp(&costs, &targets).unwrap();
    for (a, b) in lp.pmf.probs().iter().zip(&targets.rows()[0]) {
        assert!((a - b).abs() < 1e-12);
    }
    let expect: f64 = costs.values().iter().zip(&targets.rows()[0]).map(|(h, p)| h * p).sum();
    assert!((lp.objective - expect).abs() < 1e-12);
}

#[test]
fn lp_support_respects_the_bound_on_real_costs() {
    let mut rng = common::rng(21);
    for _ in 0..30 {
        let m = rng.random_range(2..=4);
        let q = rng.random_range(2..=3);
        let noise = rng.random_range(0.05..2.0);
        let spec = common::random_spec(&mut rng, m, q, noise);
        let costs = cost_tensor(&spec, &GridPolicy::default()).unwrap();
        let targets = common::random_marginals(&mut rng, m, q);
        let lp = solve_marginal_lp(&costs, &targets).unwrap();
        assert_feasible(&lp.pmf, &targets);
        let count = lp.pmf.probs().iter().filter(|&&v| v > SUPPORT_THRESHOLD).count();
        assert!(count <= support_bound(m, q));
    }
}

#[test]
fn binary_uniform_lp_switches_support_with_snr() {
    let policy = GridPolicy::default();
    let high = common::binary(10f64.powf(-1.5));
    let ut = uniform_transmission(&high, &cost_tensor(&high, &policy).unwrap(), &policy).unwrap();
    let support = ut.lp.pmf.support();
    assert_eq!(support, vec![common::sym(&[1, 2]), common::sym(&[2, 1])]);
    for t in &support {
        assert!((ut.lp.pmf.prob(t) - 0.5).abs() < 1e-12);
    }
    let low = common::binary(10f64.powf(0.5));
    let costs = cost_tensor(&low, &policy).unwrap();
    let lp = solve_uniform_lp(&costs).unwrap();
    assert_eq!(lp.pmf.support(), vec![common::sym(&[1, 1]), common::sym(&[2, 2])]);
}

#[test]
fn support_reduction_keeps_marginals_and_information() {
    let mut rng = common::rng(5);
    let policy = GridPolicy::default();
    for _ in 0..12 {
        let m = rng.random_range(2..=3);
        let q = rng.random_range(2..=3);
        let noise = rng.random_range(0.05..1.0);
        let spec = common::random_spec(&mut rng, m, q, noise);
        let costs = cost_tensor(&spec, &policy).unwrap();
        let p = JointPmf::new(m, q, common::random_pmf(&mut rng, spec.num_symbols())).unwrap();
        let reduced = support_reduce(&spec, &p, &costs).unwrap();
        assert_feasible(&reduced.pmf, &marginals_of(&p, &spec));
        assert!(reduced.pmf.support_size() <= support_bound(m, q));
        let before = mutual_information(&p, &spec).unwrap();
        let after = mutual_information(&reduced.pmf, &spec).unwrap();
        assert!(after >= before - 2e-6, "{after} < {before}");
    }
    let spec = common::binary(0.5);
    let costs = cost_tensor(&spec, &policy).unwrap();
    let p = JointPmf::uniform(2, 2);
    let reduced = support_reduce(&spec, &p, &costs).unwrap();
    assert!(reduced.pmf.support_size() <= 3);
    assert!(mutual_information(&reduced.pmf, &spec).unwrap() >= mutual_information(&p, &spec).unwrap());
}

#[test]
fn ba_lower_bound_is_monotone_and_dominates_the_lp() {
    let mut rng = common::rng(8);
    let policy = GridPolicy::default();
    for _ in 0..6 {
        let m = rng.random_range(2..=3);
        let q = rng.random_range(1..=2);
        let noise = rng.random_range(0.05..2.0);
        let spec = common::random_spec(&mut rng, m, q, noise);
        let ba = blahut_arimoto(&spec, &BaConfig::default()).unwrap();
        assert!(ba.converged);
        for w in ba.lower_bounds.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} then {}", w[0], w[1]);
        }
        assert!(ba.capacity_bits <= ba.upper_bound_bits + 1e-12);
        assert!(ba.capacity_bits <= (spec.num_symbols() as f64).log2() + 1e-12);
        let ut = uniform_transmission(&spec, &cost_tensor(&spec, &policy).unwrap(), &policy).unwrap();
        assert!(ba.capacity_bits >= ut.rate_bits - 1e-6, "{} < {}", ba.capacity_bits, ut.rate_bits);
    }
}

#[test]
fn ba_output_reduces_to_small_support() {
    let spec = common::binary(0.3);
    let policy = GridPolicy::default();
    let ba = blahut_arimoto(&spec, &BaConfig::default()).unwrap();
    let costs = cost_tensor(&spec, &policy).unwrap();
    let reduced = support_reduce(&spec, &ba.pmf, &costs).unwrap();
    assert!(reduced.pmf.support_size() <= 3);
    let mi = mutual_information(&reduced.pmf, &spec).unwrap();
    assert!((mi - ba.capacity_bits).abs() < 1e-4, "{mi} vs {}", ba.capacity_bits);
}
