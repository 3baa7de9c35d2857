//! Monte Carlo evaluation of the regimes.
//!
//! Nature (the quality chain and the private signals) draws from a
//! ChaCha8 stream selected by `(seed, replication)`. Every period consumes
//! exactly two uniforms whatever the policy does, so regimes run with the
//! same stream see identical state and signal paths.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{belief_update, Belief};
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::model::{ActionPair, GammaFn, Observation, Params, PublicOutcome, State};
use crate::solver::{greedy_choice, PolicyTable, ValueTable};
use crate::strategic::{incentivized_choice, myopic_choice, IncentiveScheme};

/// Generator used for every stream, echoed in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64(seed), stream = replication index";

/// How a regime picks its rule each period.
#[derive(Clone, Copy, Debug)]
pub enum DecisionRule<'a> {
    /// One-step greedy with respect to a solved value table, at the exact
    /// current belief.
    Greedy(&'a ValueTable),
    /// Myopic argmax at the exact belief.
    Myopic(&'a [GammaFn]),
    /// Subsidized myopic argmax at the exact belief.
    Incentivized {
        scheme: &'a IncentiveScheme,
        gamma_set: &'a [GammaFn],
    },
    /// Rule stored at the nearest grid node.
    Table(&'a PolicyTable),
}

impl DecisionRule<'_> {
    pub fn choose(&self, params: &Params, belief: Belief) -> GammaFn {
        match *self {
            DecisionRule::Greedy(vt) => greedy_choice(params, vt, belief),
            DecisionRule::Myopic(set) => myopic_choice(params, belief, set),
            DecisionRule::Incentivized { scheme, gamma_set } => {
                incentivized_choice(params, belief, scheme, gamma_set)
            }
            DecisionRule::Table(pt) => pt.lookup(belief),
        }
    }
}

/// State and signal generator with a draw counter.
pub struct Nature {
    rng: ChaCha8Rng,
    draws: u64,
}

impl Nature {
    pub fn new(seed: u64, replication: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replication);
        Nature { rng, draws: 0 }
    }

    fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.gen::<f64>()
    }

    pub fn initial_state(&mut self, params: &Params) -> State {
        if self.uniform() < params.initial_belief {
            State::Good
        } else {
            State::Bad
        }
    }

    pub fn observe(&mut self, params: &Params, state: State) -> Observation {
        let correct = Observation::matching(state);
        if self.uniform() < params.p {
            match correct {
                Observation::Low => Observation::High,
                Observation::High => Observation::Low,
            }
        } else {
            correct
        }
    }

    pub fn step(&mut self, params: &Params, state: State) -> State {
        if self.uniform() < params.epsilon {
            match state {
                State::Bad => State::Good,
                State::Good => State::Bad,
            }
        } else {
            state
        }
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// Everything that happened in one period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub state: State,
    pub observation: Observation,
    pub belief: Belief,
    pub gamma: GammaFn,
    pub action: ActionPair,
    pub outcome: PublicOutcome,
    pub paid: bool,
}

/// Runs `burn_in + horizon` periods, handing each one to `observe` together
/// with a flag telling whether it is past the burn-in.
fn run<F>(
    params: &Params,
    rule: DecisionRule<'_>,
    scheme: Option<&IncentiveScheme>,
    nature: &mut Nature,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(&Period, bool),
{
    let mut state = nature.initial_state(params);
    let mut belief = Belief::new(params.initial_belief);
    let total = params.burn_in + params.horizon;
    for t in 0..total {
        let observation = nature.observe(params, state);
        let gamma = rule.choose(params, belief);
        let action = gamma.act(observation);
        let outcome = gamma.outcome(observation);
        let paid = action.reports() && scheme.is_some_and(|s| s.amount > 0.0 && s.pays_at(belief));
        observe(
            &Period {
                state,
                observation,
                belief,
                gamma,
                action,
                outcome,
                paid,
            },
            t >= params.burn_in,
        );
        belief = belief_update(params, belief, &gamma, outcome)?;
        state = nature.step(params, state);
    }
    Ok(())
}

/// Time averages of one trajectory, taken after the burn-in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub avg_reward: f64,
    pub avg_payment: f64,
    pub frac_in_payset: f64,
    pub frac_learning: f64,
    /// Fraction of periods in which the product was good.
    pub frac_good: f64,
    pub horizon: usize,
    pub seed: u64,
    pub replication: u64,
    /// Uniforms consumed by nature over the whole run, burn-in included.
    pub nature_draws: u64,
}

#[derive(Default)]
struct Tally {
    good_buys: u64,
    bad_buys: u64,
    reports: u64,
    paid: u64,
    in_payset: u64,
    learning: u64,
    good: u64,
}

/// Simulates one replication of a regime.
pub fn simulate(
    params: &Params,
    rule: DecisionRule<'_>,
    scheme: Option<&IncentiveScheme>,
    seed: u64,
    replication: u64,
) -> Result<TrajectoryStats> {
    params.validate()?;
    let mut nature = Nature::new(seed, replication);
    let mut k = Tally::default();
    run(params, rule, scheme, &mut nature, |p, counted| {
        if !counted {
            return;
        }
        if p.action.buy {
            match p.state {
                State::Good => k.good_buys += 1,
                State::Bad => k.bad_buys += 1,
            }
        }
        k.reports += p.action.reports() as u64;
        k.paid += p.paid as u64;
        k.in_payset += scheme.is_some_and(|s| s.pays_at(p.belief)) as u64;
        k.learning += p.gamma.is_learning() as u64;
        k.good += (p.state == State::Good) as u64;
    })?;
    let h = params.horizon as f64;
    let amount = scheme.map_or(0.0, |s| s.amount);
    Ok(TrajectoryStats {
        avg_reward: (0.5 * k.good_buys as f64 - 0.5 * k.bad_buys as f64 - params.c * k.reports as f64) / h,
        avg_payment: amount * k.paid as f64 / h,
        frac_in_payset: k.in_payset as f64 / h,
        frac_learning: k.learning as f64 / h,
        frac_good: k.good as f64 / h,
        horizon: params.horizon,
        seed,
        replication,
        nature_draws: nature.draws(),
    })
}

/// Full period-by-period record of a short run (burn-in included).
pub fn simulate_trace(
    params: &Params,
    rule: DecisionRule<'_>,
    scheme: Option<&IncentiveScheme>,
    seed: u64,
    replication: u64,
) -> Result<Vec<Period>> {
    params.validate()?;
    let mut nature = Nature::new(seed, replication);
    let mut out = Vec::with_capacity(params.burn_in + params.horizon);
    run(params, rule, scheme, &mut nature, |p, _| out.push(*p))?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyBin {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Share of post-burn-in periods the public belief spends in each of
/// `bins` equal-width bins.
pub fn occupancy_profile(
    params: &Params,
    rule: DecisionRule<'_>,
    scheme: Option<&IncentiveScheme>,
    seed: u64,
    bins: usize,
) -> Result<Vec<OccupancyBin>> {
    if bins < 2 {
        return Err(Error::InvalidParams(vec![crate::error::Violation::new(
            "bins",
            bins.to_string(),
            "bins must be at least 2",
        )]));
    }
    params.validate()?;
    let mut counts = vec![0u64; bins];
    let mut nature = Nature::new(seed, 0);
    run(params, rule, scheme, &mut nature, |p, counted| {
        if counted {
            let b = ((p.belief.p1() * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
    })?;
    let h = params.horizon as f64;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &n)| OccupancyBin {
            lo: i as f64 / bins as f64,
            hi: (i + 1) as f64 / bins as f64,
            mass: n as f64 / h,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Team,
    Strategic,
    Incentivized,
    IncentivizedNetOfPayments,
}

impl Arm {
    pub const ALL: [Arm; 4] = [
        Arm::Team,
        Arm::Strategic,
        Arm::Incentivized,
        Arm::IncentivizedNetOfPayments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Team => "team",
            Arm::Strategic => "strategic",
            Arm::Incentivized => "incentivized",
            Arm::IncentivizedNetOfPayments => "incentivized_net",
        }
    }
}

/// Whether policies are evaluated at the exact belief or read off the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lookup {
    #[default]
    Exact,
    GridSnap,
}

/// The solved objects each regime is driven by.
#[derive(Clone, Copy, Debug)]
pub struct RegimeInputs<'a> {
    pub team_values: &'a ValueTable,
    pub team_policy: &'a PolicyTable,
    pub strategic_policy: &'a PolicyTable,
    pub incentivized_policy: &'a PolicyTable,
    pub scheme: &'a IncentiveScheme,
    pub gamma_set: &'a [GammaFn],
    pub lookup: Lookup,
}

impl<'a> RegimeInputs<'a> {
    fn rule(&self, arm: Arm) -> DecisionRule<'a> {
        match (arm, self.lookup) {
            (Arm::Team, Lookup::Exact) => DecisionRule::Greedy(self.team_values),
            (Arm::Team, Lookup::GridSnap) => DecisionRule::Table(self.team_policy),
            (Arm::Strategic, Lookup::Exact) => DecisionRule::Myopic(self.gamma_set),
            (Arm::Strategic, Lookup::GridSnap) => DecisionRule::Table(self.strategic_policy),
            (_, Lookup::Exact) => DecisionRule::Incentivized {
                scheme: self.scheme,
                gamma_set: self.gamma_set,
            },
            (_, Lookup::GridSnap) => DecisionRule::Table(self.incentivized_policy),
        }
    }
}

/// Mean and standard error over replications.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Panics on fewer than two samples.
    pub fn of(xs: &[f64]) -> Self {
        assert!(xs.len() >= 2, "need at least two replications");
        let n = xs.len() as f64;
        let mean = pairwise_sum(xs) / n;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1.0);
        Estimate {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: Arm,
    pub avg_reward: Estimate,
    pub avg_payment: Estimate,
    pub frac_in_payset: Estimate,
    pub frac_learning: Estimate,
    pub frac_good: Estimate,
}

/// One row per (replication, arm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub seed: u64,
    pub replication: u64,
    pub regime: String,
    pub avg_reward: f64,
    pub avg_payment: f64,
    pub frac_in_payset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub horizon: usize,
    pub burn_in: usize,
    pub num_replications: usize,
    pub seed: u64,
    pub lookup: Lookup,
    pub arms: Vec<ArmSummary>,
    /// Paired (common random numbers) difference Team − Incentivized.
    pub team_minus_incentivized: Estimate,
    /// Paired difference Incentivized − Strategic.
    pub incentivized_minus_strategic: Estimate,
    /// Paired difference Team − Strategic.
    pub team_minus_strategic: Estimate,
    pub replications: Vec<ReplicationRow>,
}

impl ComparisonReport {
    pub fn arm(&self, arm: Arm) -> &ArmSummary {
        self.arms.iter().find(|a| a.arm == arm).expect("all arms present")
    }
}

/// Per-replication stats of the three simulated regimes, in the order
/// team, strategic, incentivized.
pub type ReplicationStats = [TrajectoryStats; 3];

pub fn run_replications(params: &Params, inputs: &RegimeInputs<'_>) -> Result<Vec<ReplicationStats>> {
    params.validate()?;
    let results = map_indexed(params.execution, params.num_replications, |r| {
        let r = r as u64;
        let team = simulate(params, inputs.rule(Arm::Team), None, params.seed, r)?;
        let strat = simulate(params, inputs.rule(Arm::Strategic), None, params.seed, r)?;
        let inc = simulate(
            params,
            inputs.rule(Arm::Incentivized),
            Some(inputs.scheme),
            params.seed,
            r,
        )?;
        Ok([team, strat, inc])
    });
    results.into_iter().collect()
}

/// Simulates team, strategic and incentivized play under common random
/// numbers and summarizes the four arms.
pub fn compare_regimes(params: &Params, inputs: &RegimeInputs<'_>) -> Result<ComparisonReport> {
    if params.num_replications < 2 {
        return Err(Error::InvalidParams(vec![crate::error::Violation::new(
            "num_replications",
            params.num_replications.to_string(),
            "comparison needs at least 2 replications",
        )]));
    }
    let reps = run_replications(params, inputs)?;
    Ok(summarize(params, inputs.lookup, &reps))
}

pub fn summarize(params: &Params, lookup: Lookup, reps: &[ReplicationStats]) -> ComparisonReport {
    let col = |arm: Arm, f: &dyn Fn(&TrajectoryStats) -> f64| -> Vec<f64> {
        reps.iter()
            .map(|r| match arm {
                Arm::Team => f(&r[0]),
                Arm::Strategic => f(&r[1]),
                Arm::Incentivized => f(&r[2]),
                Arm::IncentivizedNetOfPayments => f(&r[2]),
            })
            .collect()
    };
    let arms = Arm::ALL
        .iter()
        .map(|&arm| {
            let reward = if arm == Arm::IncentivizedNetOfPayments {
                col(arm, &|s| s.avg_reward - s.avg_payment)
            } else {
                col(arm, &|s| s.avg_reward)
            };
            ArmSummary {
                arm,
                avg_reward: Estimate::of(&reward),
                avg_payment: Estimate::of(&col(arm, &|s| s.avg_payment)),
                frac_in_payset: Estimate::of(&col(arm, &|s| s.frac_in_payset)),
                frac_learning: Estimate::of(&col(arm, &|s| s.frac_learning)),
                frac_good: Estimate::of(&col(arm, &|s| s.frac_good)),
            }
        })
        .collect();
    let diff = |a: usize, b: usize| {
        let d: Vec<f64> = reps.iter().map(|r| r[a].avg_reward - r[b].avg_reward).collect();
        Estimate::of(&d)
    };
    let mut replications = Vec::with_capacity(reps.len() * 4);
    for r in reps {
        for (arm, s, reward) in [
            (Arm::Team, &r[0], r[0].avg_reward),
            (Arm::Strategic, &r[1], r[1].avg_reward),
            (Arm::Incentivized, &r[2], r[2].avg_reward),
            (Arm::IncentivizedNetOfPayments, &r[2], r[2].avg_reward - r[2].avg_payment),
        ] {
            replications.push(ReplicationRow {
                seed: s.seed,
                replication: s.replication,
                regime: arm.name().to_owned(),
                avg_reward: reward,
                avg_payment: s.avg_payment,
                frac_in_payset: s.frac_in_payset,
            });
        }
    }
    ComparisonReport {
        horizon: params.horizon,
        burn_in: params.burn_in,
        num_replications: reps.len(),
        seed: params.seed,
        lookup,
        arms,
        team_minus_incentivized: diff(0, 2),
        incentivized_minus_strategic: diff(2, 1),
        team_minus_strategic: diff(0, 1),
        replications,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::model::non_dominated_gammas;
    use crate::solver::Regime;

    fn short() -> Params {
        Params {
            horizon: 20_000,
            burn_in: 1_000,
            grid_size: 101,
            ..Params::default()
        }
    }

    #[test]
    fn abstaining_earns_and_pays_nothing() {
        let p = short();
        let grid = Grid::new(p.grid_size);
        let pt = PolicyTable::uniform(grid, GammaFn::abstain(), Regime::Strategic);
        let everywhere = IncentiveScheme::from_flags(grid, &vec![true; grid.len()], p.c);
        for seed in [0, 7, 99] {
            let s = simulate(&p, DecisionRule::Table(&pt), Some(&everywhere), seed, 0).unwrap();
            assert_eq!(s.avg_reward, 0.0);
            assert_eq!(s.avg_payment, 0.0);
            assert_eq!(s.frac_learning, 0.0);
        }
    }

    #[test]
    fn reproducible() {
        let p = short();
        let set = non_dominated_gammas();
        let a = simulate(&p, DecisionRule::Myopic(&set), None, 3, 1).unwrap();
        let b = simulate(&p, DecisionRule::Myopic(&set), None, 3, 1).unwrap();
        assert_eq!(a, b);
        let c = simulate(&p, DecisionRule::Myopic(&set), None, 3, 2).unwrap();
        assert_ne!(a.avg_reward.to_bits(), c.avg_reward.to_bits());
    }

    #[test]
    fn no_scheme_means_no_payment() {
        let p = short();
        let set = non_dominated_gammas();
        let grid = Grid::new(p.grid_size);
        let pt = PolicyTable::uniform(grid, GammaFn::from_id(1), Regime::Team);
        let s = simulate(&p, DecisionRule::Table(&pt), None, 0, 0).unwrap();
        assert_eq!(s.avg_payment, 0.0);
        assert_eq!(s.frac_in_payset, 0.0);
        let s = simulate(&p, DecisionRule::Myopic(&set), None, 0, 0).unwrap();
        assert_eq!(s.avg_payment, 0.0);
    }

    #[test]
    fn payment_is_amount_times_paid_report_frequency() {
        let p = short();
        let grid = Grid::new(p.grid_size);
        let pay: Vec<bool> = (0..grid.len()).map(|i| i < 40).collect();
        let scheme = IncentiveScheme::from_flags(grid, &pay, p.c);
        let pt = PolicyTable::uniform(grid, GammaFn::from_id(1), Regime::Team);
        let s = simulate(&p, DecisionRule::Table(&pt), Some(&scheme), 5, 0).unwrap();
        let trace = simulate_trace(&p, DecisionRule::Table(&pt), Some(&scheme), 5, 0).unwrap();
        let paid = trace[p.burn_in..]
            .iter()
            .filter(|x| x.action.reports() && scheme.pays_at(x.belief))
            .count();
        assert_eq!(s.avg_payment, p.c * paid as f64 / p.horizon as f64);
        assert!(s.avg_payment > 0.0);
    }

    #[test]
    fn nature_is_shared_across_policies() {
        let p = short();
        let set = non_dominated_gammas();
        let grid = Grid::new(p.grid_size);
        let pt = PolicyTable::uniform(grid, GammaFn::from_id(11), Regime::Team);
        let a = simulate_trace(&p, DecisionRule::Myopic(&set), None, 11, 4).unwrap();
        let b = simulate_trace(&p, DecisionRule::Table(&pt), None, 11, 4).unwrap();
        assert!(a
            .iter()
            .zip(&b)
            .all(|(x, y)| x.state == y.state && x.observation == y.observation));
        let sa = simulate(&p, DecisionRule::Myopic(&set), None, 11, 4).unwrap();
        let sb = simulate(&p, DecisionRule::Table(&pt), None, 11, 4).unwrap();
        assert_eq!(sa.nature_draws, sb.nature_draws);
        assert_eq!(sa.nature_draws, 1 + 2 * (p.burn_in + p.horizon) as u64);
        assert_eq!(sa.frac_good, sb.frac_good);
    }

    #[test]
    fn occupancy_sums_to_one() {
        let p = short();
        let set = non_dominated_gammas();
        let h = occupancy_profile(&p, DecisionRule::Myopic(&set), None, 1, 20).unwrap();
        assert_eq!(h.len(), 20);
        let total: f64 = h.iter().map(|b| b.mass).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(occupancy_profile(&p, DecisionRule::Myopic(&set), None, 1, 1).is_err());
    }

    #[test]
    fn abstaining_belief_drifts_to_one_half() {
        let p = Params {
            initial_belief: 0.05,
            burn_in: 0,
            horizon: 50_000,
            ..short()
        };
        let grid = Grid::new(p.grid_size);
        let pt = PolicyTable::uniform(grid, GammaFn::abstain(), Regime::Strategic);
        let h = occupancy_profile(&p, DecisionRule::Table(&pt), None, 0, 10).unwrap();
        // Deterministic orbit of the prediction map from 0.05.
        let mut x = 0.05;
        let mut expect = [0.0; 10];
        for _ in 0..p.horizon {
            expect[((x * 10.0) as usize).min(9)] += 1.0 / p.horizon as f64;
            x = p.epsilon * (1.0 - x) + (1.0 - p.epsilon) * x;
        }
        for (b, e) in h.iter().zip(expect) {
            assert!((b.mass - e).abs() < 1e-9);
        }
        assert!(h[4].mass > 0.9);
        assert!((x - 0.5).abs() < 1e-9);
    }

    #[test]
    fn estimate_matches_textbook() {
        let e = Estimate::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
