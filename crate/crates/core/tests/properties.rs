mod common;

use common::{random_connected_graph, random_linear_problem, rng};
use proptest::prelude::*;
use waterline::bounds::{bound_linear, count_exp_poly_zeros, descartes_bound, Shift};
use waterline::costate::channel_profile;
use waterline::problem::{check_conditions, CostModel, Objective};
use waterline::waterfill::{channel_profiles, spend_for_beta};
use waterline::{
    build_laplacian, objective_value, solve, spectral_decompose, CampaignProblem, TerminalCostate,
};

fn problem_from_seed(seed: u64, max_n: usize) -> CampaignProblem {
    let mut r = rng(seed);
    let n = 2 + (seed as usize % (max_n - 1));
    let g = random_connected_graph(&mut r, n);
    let m = 1 + (seed as usize / 7) % 2;
    random_linear_problem(&mut r, g, m, 0.5 + (seed % 5) as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_and_spectrum_invariants(seed in 0u64..10_000, n in 2usize..16) {
        let g = random_connected_graph(&mut rng(seed), n);
        let lap = build_laplacian(&g);
        let l = lap.matrix();
        for i in 0..n {
            prop_assert!(l.row(i).sum().abs() <= 1e-12);
            for j in 0..n {
                prop_assert_eq!(l[(i, j)], l[(j, i)]);
            }
        }
        let sd = spectral_decompose(&lap).unwrap();
        let q = sd.vectors();
        let qtq = q.transpose() * q;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((qtq[(i, j)] - want).abs() <= 1e-10);
            }
        }
        let rec = sd.reconstruct() - l;
        prop_assert!(rec.amax() <= 1e-9 * lap.max_abs_entry());
        for j in 1..n {
            prop_assert!(q.column(j).sum().abs() <= 1e-10);
        }
        prop_assert!(sd.eigenvalues().iter().all(|&x| x >= -1e-10));
        prop_assert!(sd.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn spend_is_monotone_in_beta(seed in 0u64..10_000, b1 in 0.0f64..2.0, b2 in 0.0f64..2.0) {
        let p = problem_from_seed(seed, 6);
        let sd = spectral_decompose(&build_laplacian(&p.graph)).unwrap();
        let lam = TerminalCostate::new(p.objective.p.clone()).unwrap();
        let profiles = channel_profiles(&p, &sd, &lam);
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(spend_for_beta(&p, &profiles, lo) >= spend_for_beta(&p, &profiles, hi));
    }

    #[test]
    fn solutions_are_feasible_and_slack_complementary(seed in 0u64..10_000) {
        let p = problem_from_seed(seed, 8);
        let sol = solve(&p).unwrap();
        prop_assert!(sol.spend <= p.budget * (1.0 + 1e-6));
        prop_assert_eq!(sol.binding, sol.beta_star > 0.0);
        if sol.binding {
            prop_assert!((sol.spend - p.budget).abs() <= 1e-6 * p.budget);
        }
        prop_assert!(sol.schedule.is_well_formed(p.horizon));
        let costs: Vec<CostModel> = p.channels.iter().map(|c| c.cost).collect();
        prop_assert!((sol.schedule.spend(&costs) - sol.spend).abs() <= 1e-12 * p.budget.max(1.0));
        for (ch, c) in sol.schedule.channels.iter().zip(&p.channels) {
            prop_assert_eq!(ch.u_max, c.u_max);
        }
        for c in &sol.certificate.channels {
            prop_assert!(c.realized_switches <= c.bound_linear_at);
            prop_assert!(c.bound_linear_at <= c.bound_linear_sup);
            prop_assert!(c.bound_linear_sup < p.n());
        }
    }

    #[test]
    fn nonnegative_costate_keeps_nonnegative_gains_nonnegative(seed in 0u64..10_000, n in 2usize..12) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n);
        let sd = spectral_decompose(&build_laplacian(&g)).unwrap();
        let lam: Vec<f64> = (0..n).map(|k| if (seed >> k) & 1 == 1 { 0.0 } else { 1.0 + k as f64 }).collect();
        let lam = TerminalCostate::new(lam).unwrap();
        let b: Vec<f64> = (0..n).map(|k| ((seed >> (k + 3)) & 3) as f64).collect();
        prop_assume!(b.iter().any(|&x| x > 0.0) && !lam.is_zero());
        let prof = channel_profile(&sd, &lam, &b, 0, 3.0);
        for k in 0..=300 {
            prop_assert!(prof.eval_h(3.0 * k as f64 / 300.0) >= -1e-10);
        }
        let direct: f64 = lam.as_slice().iter().zip(&b).map(|(x, y)| x * y).sum();
        prop_assert!((prof.eval_h(3.0) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        let reach = lam.as_slice().iter().sum::<f64>() * b.iter().sum::<f64>() / n as f64;
        prop_assert!((prof.constant_term() - reach).abs() <= 1e-10 * reach.max(1.0));
    }

    #[test]
    fn uniform_weights_give_flat_profiles(seed in 0u64..10_000, n in 2usize..10, c in 0.1f64..5.0) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n);
        let sd = spectral_decompose(&build_laplacian(&g)).unwrap();
        let b: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin()).collect();
        let prof = channel_profile(&sd, &TerminalCostate::new(vec![c; n]).unwrap(), &b, 0, 2.0);
        let h0 = prof.eval_h(0.0);
        for k in 0..=50 {
            prop_assert!((prof.eval_h(2.0 * k as f64 / 50.0) - h0).abs() <= 1e-12);
        }
        prop_assert_eq!(bound_linear(&sd, &vec![c; n], &b, Shift::At(0.0)), 0);
    }

    #[test]
    fn exponential_sums_respect_zero_bounds(
        rates in prop::collection::btree_set(0u32..400, 1..7),
        coeffs in prop::collection::vec(-1.0f64..1.0, 6),
        width in 1.0f64..8.0,
    ) {
        let rates: Vec<f64> = rates.into_iter().map(|r| r as f64 / 100.0).collect();
        let coeffs = &coeffs[..rates.len()];
        prop_assume!(coeffs.iter().any(|&d| d != 0.0));
        let neg = count_exp_poly_zeros(&rates, coeffs, (-width, -1e-9), 8_000).unwrap();
        prop_assert!(neg.count <= descartes_bound(coeffs));
        let all = count_exp_poly_zeros(&rates, coeffs, (-width, width), 8_000).unwrap();
        prop_assert!(all.count < rates.len());
    }

    #[test]
    fn sup_bound_dominates_every_threshold(seed in 0u64..10_000, s in 0.0f64..3.0) {
        let p = problem_from_seed(seed, 10);
        let sd = spectral_decompose(&build_laplacian(&p.graph)).unwrap();
        for ch in &p.channels {
            let at = bound_linear(&sd, &p.objective.p, &ch.b, Shift::At(s));
            let sup = bound_linear(&sd, &p.objective.p, &ch.b, Shift::Sup);
            prop_assert!(at <= sup);
            prop_assert!(sup < p.n());
        }
    }

    #[test]
    fn condition_flags_are_reproducible(seed in 0u64..10_000) {
        let p = problem_from_seed(seed, 8);
        let lap = build_laplacian(&p.graph);
        let sd = spectral_decompose(&lap).unwrap();
        let a = check_conditions(&p, &lap, &sd);
        let b = check_conditions(&p, &lap, &sd);
        prop_assert_eq!(&a, &b);
        for c in &a.channels {
            // span{L^k b} never leaves the complement of the ones vector
            prop_assert!(c.controllability_rank < p.n());
        }
    }

    #[test]
    fn power_costs_are_monotone(v in 0.1f64..5.0, a in 0.05f64..1.0, u_max in 0.1f64..10.0) {
        let c = CostModel::power(v, a);
        prop_assert_eq!(c.eval(0.0), 0.0);
        let mut last = 0.0;
        for k in 1..=100 {
            let x = c.eval(u_max * k as f64 / 100.0);
            prop_assert!(x >= last);
            last = x;
        }
    }

    #[test]
    fn sigmoid_objective_is_bounded(
        x in prop::collection::vec(-1e6f64..1e6, 4),
        theta in prop::collection::vec(-10.0f64..10.0, 4),
        alpha in prop::collection::vec(0.01f64..50.0, 4),
    ) {
        let p = vec![0.1, 0.5, 1.0, 2.0];
        let obj = Objective::sigmoid(p.clone(), alpha, theta);
        let j = objective_value(&obj, &x);
        prop_assert!((0.0..=p.iter().sum::<f64>()).contains(&j));
    }
}
