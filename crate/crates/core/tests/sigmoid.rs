use waterline::problem::Objective;
use waterline::sigmoid::{default_epsilon, late_deciders, SigmoidConfig};
use waterline::{scenarios, simulate, solve, solve_sigmoid};

#[test]
fn single_decider_matches_one_hot_linear_solve() {
    let mut p = scenarios::seven_agent();
    let x_t = simulate(&p, &solve(&p).unwrap().schedule, 4096).unwrap().terminal().to_vec();
    let mut theta: Vec<f64> = x_t.iter().map(|x| x + 1.0).collect();
    theta[3] = x_t[3];
    let alpha = vec![8.0; 7];
    p.objective = Objective::sigmoid(p.objective.p.clone(), alpha, theta);
    let sol = solve_sigmoid(&p, &SigmoidConfig { max_iters: 1, ..Default::default() }).unwrap();
    assert_eq!(sol.log[0].members, vec![3]);
    assert_eq!(sol.log[1].source, Some(vec![3]));

    let mut linear = p.clone();
    let mut one_hot = vec![0.0; 7];
    one_hot[3] = 8.0 * 1.0 / 2.0;
    linear.objective = Objective::linear(one_hot);
    let reference = solve(&linear).unwrap();
    assert_eq!(sol.log[1].beta_star, reference.beta_star);
    assert_eq!(sol.log[1].spend, reference.spend);
}

#[test]
fn returned_iterate_never_loses_to_the_initializer() {
    let base = scenarios::seven_agent_sigmoid();
    for shift in [-0.3, -0.1, 0.0, 0.05, 0.2] {
        let mut p = base.clone();
        p.objective.theta.iter_mut().for_each(|t| *t += shift);
        let sol = solve_sigmoid(&p, &SigmoidConfig::default()).unwrap();
        assert!(sol.objective >= sol.log[0].objective);
        assert_eq!(sol.objective, sol.log[sol.best_iteration].objective);
        let traj = simulate(&p, &sol.solution.schedule, SigmoidConfig::default().steps).unwrap();
        let eps = default_epsilon(&p.objective.theta);
        assert_eq!(
            late_deciders(&traj, &p.objective, eps).members,
            sol.log[sol.best_iteration].members
        );
    }
}
