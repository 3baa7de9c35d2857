use cascade_core::grid::Grid;
use cascade_core::model::{non_dominated_gammas, Observation, Params, State};
use cascade_core::sim::{
    compare_regimes, run_replications, simulate, simulate_trace, DecisionRule, Lookup, RegimeInputs,
};
use cascade_core::solver::solve_average_reward;
use cascade_core::strategic::{
    build_incentives, coincidence_set, incentivized_policy, strategic_policy, IncentiveScheme,
};
use cascade_core::Execution;

fn short(horizon: usize) -> Params {
    Params {
        grid_size: 401,
        horizon,
        burn_in: 1000,
        num_replications: 4,
        seed: 7,
        ..Params::default()
    }
}

/// Public belief recomputed from the trace with a hand-written filter.
#[test]
fn belief_tracker_matches_an_independent_filter() {
    let p = short(50_000);
    let (vt, _) = solve_average_reward(&p, &non_dominated_gammas()).unwrap();
    let trace = simulate_trace(&p, DecisionRule::Greedy(&vt), None, p.seed, 3).unwrap();
    let eps = p.epsilon;
    let mut b = p.initial_belief;
    for (t, period) in trace.iter().enumerate() {
        if t % 10_000 == 0 {
            assert!((period.belief.p1() - b).abs() < 1e-9, "step {t}: {} vs {b}", period.belief.p1());
        }
        // Probability of the observed outcome under each state.
        let like = |good: bool| {
            [Observation::Low, Observation::High]
                .into_iter()
                .filter(|&v| period.gamma.outcome(v) == period.outcome)
                .map(|v| {
                    let matches = (v == Observation::High) == good;
                    if matches { 1.0 - p.p } else { p.p }
                })
                .sum::<f64>()
        };
        let num = b * like(true);
        let post = num / (num + (1.0 - b) * like(false));
        b = post * (1.0 - eps) + (1.0 - post) * eps;
    }
}

#[test]
fn trace_respects_the_channel() {
    let p = short(20_000);
    let set = non_dominated_gammas();
    let trace = simulate_trace(&p, DecisionRule::Myopic(&set), None, 1, 0).unwrap();
    let flips = trace.windows(2).filter(|w| w[0].state != w[1].state).count();
    let errors = trace
        .iter()
        .filter(|t| (t.state == State::Good) != (t.observation == Observation::High))
        .count();
    let n = trace.len() as f64;
    assert!((flips as f64 / n - p.epsilon).abs() < 0.001);
    assert!((errors as f64 / n - p.p).abs() < 0.01);
}

#[test]
fn identical_rules_give_identical_paths() {
    let p = short(20_000);
    let set = non_dominated_gammas();
    let grid = Grid::new(p.grid_size);
    let none = IncentiveScheme::none(grid);
    for r in 0..3 {
        let a = simulate(&p, DecisionRule::Myopic(&set), None, p.seed, r).unwrap();
        let b = simulate(
            &p,
            DecisionRule::Incentivized {
                scheme: &none,
                gamma_set: &set,
            },
            Some(&none),
            p.seed,
            r,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn subsidy_pulls_the_belief_out_of_the_pay_set() {
    let p = short(100_000);
    let set = non_dominated_gammas();
    let (_, team) = solve_average_reward(&p, &set).unwrap();
    let strat = strategic_policy(&p, &set).unwrap();
    let cs = coincidence_set(&team, &strat).unwrap();
    let scheme = build_incentives(&p, &cs);
    let rule = DecisionRule::Incentivized {
        scheme: &scheme,
        gamma_set: &set,
    };
    let s = simulate(&p, rule, Some(&scheme), p.seed, 0).unwrap();
    assert!(s.frac_in_payset < 1.0 - s.frac_in_payset, "{}", s.frac_in_payset);
    assert!(s.avg_payment > 0.0);
}

struct Solved {
    params: Params,
    vt: cascade_core::ValueTable,
    team: cascade_core::PolicyTable,
    strat: cascade_core::PolicyTable,
    inc: cascade_core::PolicyTable,
    scheme: IncentiveScheme,
}

fn solved(p: Params) -> Solved {
    let set = non_dominated_gammas();
    let (vt, team) = solve_average_reward(&p, &set).unwrap();
    let strat = strategic_policy(&p, &set).unwrap();
    let cs = coincidence_set(&team, &strat).unwrap();
    let scheme = build_incentives(&p, &cs);
    let inc = incentivized_policy(&p, &scheme, &set).unwrap();
    Solved {
        params: p,
        vt,
        team,
        strat,
        inc,
        scheme,
    }
}

#[test]
fn comparison_needs_two_replications() {
    let mut s = solved(short(1000));
    let set = non_dominated_gammas();
    s.params.num_replications = 1;
    let inputs = RegimeInputs {
        team_values: &s.vt,
        team_policy: &s.team,
        strategic_policy: &s.strat,
        incentivized_policy: &s.inc,
        scheme: &s.scheme,
        gamma_set: &set,
        lookup: Lookup::Exact,
    };
    assert!(compare_regimes(&s.params, &inputs).is_err());
}

#[test]
fn execution_modes_and_lookups_are_reproducible() {
    let s = solved(short(10_000));
    let set = non_dominated_gammas();
    for lookup in [Lookup::Exact, Lookup::GridSnap] {
        let inputs = RegimeInputs {
            team_values: &s.vt,
            team_policy: &s.team,
            strategic_policy: &s.strat,
            incentivized_policy: &s.inc,
            scheme: &s.scheme,
            gamma_set: &set,
            lookup,
        };
        let par = run_replications(&Params { execution: Execution::Parallel, ..s.params.clone() }, &inputs).unwrap();
        let seq = run_replications(&Params { execution: Execution::Sequential, ..s.params.clone() }, &inputs).unwrap();
        assert_eq!(par, seq);
        let report = compare_regimes(&s.params, &inputs).unwrap();
        assert_eq!(report.replications.len(), 4 * s.params.num_replications);
        // Every regime consumes the same stream.
        for r in &par {
            assert!(r.iter().all(|x| x.nature_draws == r[0].nature_draws && x.frac_good == r[0].frac_good));
        }
    }
}
