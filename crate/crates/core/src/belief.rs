//! Public-belief dynamics.
//!
//! The public belief is the probability that the product is good given
//! everything later buyers can see. Under a decision rule the public
//! outcome of a period is a deterministic function of the private signal,
//! so the update is a Bayes step on the current state followed by a
//! prediction step through the quality chain. Neither step depends on how
//! the rule was chosen, which is what makes the belief a sufficient
//! statistic for the common agent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{obs_kernel, reward, GammaFn, Observation, Params, PublicOutcome, State};

/// Probability that the current state is good given the public history.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Belief(f64);

impl Belief {
    /// Panics if `p1` is outside `[0, 1]`.
    pub fn new(p1: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&p1),
            "belief must lie in [0,1], got {p1}"
        );
        Belief(p1)
    }

    pub fn p1(self) -> f64 {
        self.0
    }

    pub fn prob(self, state: State) -> f64 {
        match state {
            State::Good => self.0,
            State::Bad => 1.0 - self.0,
        }
    }

    /// Pushes the belief one period through the quality chain.
    pub fn predict(self, params: &Params) -> Belief {
        let e = params.epsilon;
        Belief::new(clamp01((1.0 - self.0) * e + self.0 * (1.0 - e)))
    }
}

/// One possible public outcome together with its probability and the
/// belief it leads to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeBranch {
    pub outcome: PublicOutcome,
    pub prob: f64,
    pub next: Belief,
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// `Σ_v 1{γ(v) = outcome} Q_v(v | state)`.
fn outcome_given_state(params: &Params, gamma: &GammaFn, outcome: PublicOutcome, state: State) -> f64 {
    Observation::ALL
        .iter()
        .filter(|&&v| gamma.outcome(v) == outcome)
        .map(|&v| obs_kernel(params, state, v))
        .sum()
}

/// Probability of seeing `outcome` when the public belief is `belief` and
/// buyers follow `gamma`.
pub fn outcome_likelihood(params: &Params, belief: Belief, gamma: &GammaFn, outcome: PublicOutcome) -> f64 {
    State::ALL
        .iter()
        .map(|&x| belief.prob(x) * outcome_given_state(params, gamma, outcome, x))
        .sum()
}

/// Posterior on the current state after seeing `outcome`, before the
/// prediction step.
pub fn posterior(params: &Params, belief: Belief, gamma: &GammaFn, outcome: PublicOutcome) -> Result<Belief> {
    let good = belief.p1() * outcome_given_state(params, gamma, outcome, State::Good);
    let bad = (1.0 - belief.p1()) * outcome_given_state(params, gamma, outcome, State::Bad);
    let total = good + bad;
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityOutcome {
            belief: belief.p1(),
            gamma_id: gamma.id(),
        });
    }
    Ok(Belief::new(clamp01(good / total)))
}

/// Next period's public belief after `outcome` under `gamma`.
pub fn belief_update(params: &Params, belief: Belief, gamma: &GammaFn, outcome: PublicOutcome) -> Result<Belief> {
    Ok(posterior(params, belief, gamma, outcome)?.predict(params))
}

/// Distinct public outcomes the rule can produce, in observation order.
pub fn outcomes(gamma: &GammaFn) -> Vec<PublicOutcome> {
    let lo = gamma.outcome(Observation::Low);
    let hi = gamma.outcome(Observation::High);
    if lo == hi {
        vec![lo]
    } else {
        vec![lo, hi]
    }
}

/// Reachable branches without allocating; unused slots are `None`.
pub fn successor_branches(params: &Params, belief: Belief, gamma: &GammaFn) -> [Option<OutcomeBranch>; 2] {
    let lo = gamma.outcome(Observation::Low);
    let hi = gamma.outcome(Observation::High);
    let branch = |outcome| {
        let prob = outcome_likelihood(params, belief, gamma, outcome);
        if prob <= 0.0 {
            return None;
        }
        let next = belief_update(params, belief, gamma, outcome).ok()?;
        Some(OutcomeBranch { outcome, prob, next })
    };
    if lo == hi {
        [branch(lo), None]
    } else {
        [branch(lo), branch(hi)]
    }
}

/// Law of next period's belief: one branch per reachable outcome.
pub fn successor_distribution(params: &Params, belief: Belief, gamma: &GammaFn) -> Vec<OutcomeBranch> {
    successor_branches(params, belief, gamma).into_iter().flatten().collect()
}

/// Expected one-period reward of a buyer following `gamma` at `belief`.
pub fn expected_reward(params: &Params, belief: Belief, gamma: &GammaFn) -> f64 {
    let mut total = 0.0;
    for x in State::ALL {
        for v in Observation::ALL {
            total += belief.prob(x) * obs_kernel(params, x, v) * reward(params, x, gamma.act(v));
        }
    }
    total
}

/// Probability that a buyer following `gamma` files a report.
pub fn report_probability(params: &Params, belief: Belief, gamma: &GammaFn) -> f64 {
    let mut total = 0.0;
    for x in State::ALL {
        for v in Observation::ALL {
            if gamma.act(v).reports() {
                total += belief.prob(x) * obs_kernel(params, x, v);
            }
        }
    }
    total
}
