use graphon_gw::barycenter::estimate_gwb;
use graphon_gw::gw::{entropic_ot, gw_objective, proximal_gw};
use graphon_gw::io::{read_step_function, write_step_function};
use graphon_gw::model::{evaluate_graphon, MARGINAL_TOL};
use graphon_gw::sampling::sample_graph;
use graphon_gw::{Family, ObservedGraph, SolverConfig, StepFunction};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn step_function(k: usize, raw: &[f64], mass: &[f64]) -> StepFunction {
    let values = Array2::from_shape_fn((k, k), |(i, j)| raw[i.min(j) * k + i.max(j)]);
    let mut m: Vec<f64> = mass[..k].to_vec();
    m.sort_by(|a, b| b.total_cmp(a));
    StepFunction::from_estimate(values, Array1::from(m)).unwrap()
}

fn arb_step() -> impl Strategy<Value = StepFunction> {
    (1usize..=8).prop_flat_map(|k| {
        (
            Just(k),
            prop::collection::vec(0.0f64..=1.0, k * k),
            prop::collection::vec(0.01f64..1.0, k),
        )
            .prop_map(|(k, raw, mass)| step_function(k, &raw, &mass))
    })
}

fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut state = seed | 1;
    for i in (1..n).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        perm.swap(i, (state % (i as u64 + 1)) as usize);
    }
    perm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_function_files_round_trip(w in arb_step()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.txt");
        write_step_function(&w, &path).unwrap();
        prop_assert_eq!(read_step_function(&path).unwrap(), w);
    }

    #[test]
    fn graphons_are_symmetric_and_bounded(f in 0usize..13, x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let spec = Family::ALL[f].into();
        let v = evaluate_graphon(&spec, x, y).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, evaluate_graphon(&spec, y, x).unwrap());
    }

    #[test]
    fn entropic_plans_are_feasible(
        n in 1usize..12,
        k in 1usize..12,
        seed in any::<u64>(),
        log_beta in -3.0f64..0.0,
    ) {
        let mut s = seed | 1;
        let mut next = || { s ^= s << 13; s ^= s >> 7; s ^= s << 17; (s >> 11) as f64 / (1u64 << 53) as f64 };
        let cost = Array2::from_shape_fn((n, k), |_| next());
        let r = Array1::from_shape_fn(n, |_| next() + 0.05);
        let c = Array1::from_shape_fn(k, |_| next() + 0.05);
        let (r, c) = (&r / r.sum(), &c / c.sum());
        let plan = entropic_ot(cost.view(), &r, &c, 10f64.powf(log_beta), 1000).unwrap();
        let (rr, cr) = plan.residuals();
        prop_assert!(rr <= MARGINAL_TOL && cr <= MARGINAL_TOL);
        prop_assert!(plan.coupling().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn proximal_plans_are_feasible_and_objective_matches(w in arb_step(), n in 2usize..40, seed in any::<u64>()) {
        let g = sample_graph(&Family::Mean.into(), n, seed).unwrap();
        let res = proximal_gw(&g, &w, &SolverConfig::default()).unwrap();
        let (rr, cr) = res.plan.residuals();
        prop_assert!(rr <= MARGINAL_TOL && cr <= MARGINAL_TOL);
        let direct = gw_objective(&g, g.measure(), w.values(), w.measure(), res.plan.coupling().view()).unwrap();
        prop_assert!((direct.max(0.0) - res.distance_sq).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gwb_ignores_node_labels(seed in any::<u64>()) {
        let graphs: Vec<ObservedGraph> = (0..4)
            .map(|i| sample_graph(&Family::AbsDiff.into(), 100 + 7 * i, seed.wrapping_add(i as u64)).unwrap())
            .collect();
        let shuffled: Vec<ObservedGraph> = graphs
            .iter()
            .enumerate()
            .map(|(i, g)| g.permuted(&random_permutation(g.node_count(), seed ^ (i as u64 + 1))).unwrap())
            .collect();
        let cfg = SolverConfig::default().with_seed(seed);
        let a = estimate_gwb(&graphs, &cfg, None).unwrap();
        let b = estimate_gwb(&shuffled, &cfg, None).unwrap();
        prop_assert_eq!(a.measure(), b.measure());
        let diff = (a.values() - b.values()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(diff <= 1e-6, "max difference {}", diff);
    }
}
