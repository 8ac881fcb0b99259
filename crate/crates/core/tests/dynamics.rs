mod common;

use common::{random_connected_graph, random_linear_problem, rng, uniform};
use rand::Rng;
use waterline::dynamics::closed_form_gain;
use waterline::waterfill::channel_profiles;
use waterline::{
    build_laplacian, objective_value, simulate, solve, spectral_decompose, BangBangSchedule,
    TerminalCostate,
};

#[test]
fn simulated_gain_matches_closed_form() {
    for k in 0..20 {
        let mut r = rng(7000 + k);
        let n = r.random_range(2..=8);
        let g = random_connected_graph(&mut r, n);
        let horizon = uniform(&mut r, 0.5, 4.0);
        let p = random_linear_problem(&mut r, g, 2, horizon);
        let sol = solve(&p).unwrap();
        let with = simulate(&p, &sol.schedule, 4096).unwrap();
        let without = simulate(&p, &BangBangSchedule::idle(&p), 4096).unwrap();
        let diff = objective_value(&p.objective, with.terminal())
            - objective_value(&p.objective, without.terminal());
        let sd = spectral_decompose(&build_laplacian(&p.graph)).unwrap();
        let lam = TerminalCostate::new(p.objective.p.clone()).unwrap();
        let exact = closed_form_gain(&channel_profiles(&p, &sd, &lam), &sol.schedule);
        assert!((diff - exact).abs() <= 1e-6 * exact.abs().max(1e-12), "{diff} vs {exact}");
        assert_eq!(exact, sol.objective_gain);
        // spend recorded by the simulator agrees with the solver
        assert!((with.final_spend() - sol.spend).abs() <= 1e-9 * p.budget);
    }
}

#[test]
fn free_dynamics_contract_to_consensus() {
    for k in 0..10 {
        let mut r = rng(7100 + k);
        let n = r.random_range(2..=12);
        let g = random_connected_graph(&mut r, n);
        let mut p = random_linear_problem(&mut r, g, 1, 3.0);
        p.x0 = (0..n).map(|_| uniform(&mut r, -2.0, 2.0)).collect();
        let gap = spectral_decompose(&build_laplacian(&p.graph)).unwrap().spectral_gap();
        let traj = simulate(&p, &BangBangSchedule::idle(&p), 2048).unwrap();
        let mean0 = p.x0.iter().sum::<f64>() / n as f64;
        let dev = |x: &[f64]| x.iter().map(|v| (v - mean0).powi(2)).sum::<f64>().sqrt();
        let d0 = dev(&p.x0);
        for (t, x) in traj.times.iter().zip(&traj.states) {
            let mean = x.iter().sum::<f64>() / n as f64;
            assert!((mean - mean0).abs() <= 1e-10);
            assert!(dev(x) <= d0 * (-gap * t).exp() * (1.0 + 1e-6));
        }
    }
}

#[test]
fn step_halving_shows_fourth_order() {
    let mut r = rng(7200);
    let g = random_connected_graph(&mut r, 6);
    let p = random_linear_problem(&mut r, g, 2, 2.0);
    let sol = solve(&p).unwrap();
    let reference = simulate(&p, &sol.schedule, 1 << 16).unwrap();
    let err = |steps: usize| -> f64 {
        let t = simulate(&p, &sol.schedule, steps).unwrap();
        t.terminal()
            .iter()
            .zip(reference.terminal())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let mut prev = err(64);
    for steps in [128, 256] {
        let e = err(steps);
        if prev > 1e-12 {
            assert!(prev / e >= 8.0 || e <= 1e-12, "steps {steps}: {prev:e} -> {e:e}");
        }
        prev = e;
    }
}

#[test]
fn drift_shifts_the_state_but_not_the_schedule() {
    let p = waterline::scenarios::seven_agent();
    let sol = solve(&p).unwrap();
    let mut q = p.clone();
    q.drift.breakpoints = vec![0.0, 5.0];
    q.drift.values = vec![vec![0.1; 7], vec![0.0; 7]];
    assert_eq!(solve(&q).unwrap().schedule, sol.schedule);
    let a = simulate(&p, &sol.schedule, 4096).unwrap();
    let b = simulate(&q, &sol.schedule, 4096).unwrap();
    // uniform drift of 0.1 for 5 time units raises every opinion by 0.5
    for (x, y) in a.terminal().iter().zip(b.terminal()) {
        assert!((y - x - 0.5).abs() < 1e-9);
    }
}
