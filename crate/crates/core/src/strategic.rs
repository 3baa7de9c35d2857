//! Myopic equilibrium play, the set where it agrees with the planner, and
//! the report subsidy paid outside that set.

use serde::{Deserialize, Serialize};

use crate::belief::{expected_reward, report_probability, Belief};
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::grid::Grid;
use crate::model::{ActionPair, GammaFn, Params};
use crate::solver::{argmax_first, canonical_set, PolicyTable, Regime, TIE_TOL};

/// Rule a buyer who acts once picks at `belief`: the one maximizing its own
/// expected reward.
pub fn myopic_choice(params: &Params, belief: Belief, gamma_set: &[GammaFn]) -> GammaFn {
    let values: Vec<f64> = gamma_set
        .iter()
        .map(|g| expected_reward(params, belief, g))
        .collect();
    gamma_set[argmax_first(&values).0]
}

pub fn strategic_policy(params: &Params, gamma_set: &[GammaFn]) -> Result<PolicyTable> {
    let set = canonical_set(gamma_set)?;
    let grid = Grid::new(params.grid_size);
    let choice = map_indexed(params.execution, grid.len(), |i| {
        myopic_choice(params, grid.belief(i), &set)
    });
    Ok(PolicyTable {
        grid,
        choice,
        regime: Regime::Strategic,
    })
}

/// Grid nodes where two policies prescribe the same rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceSet {
    pub grid: Grid,
    pub member: Vec<bool>,
}

impl CoincidenceSet {
    pub fn is_full(&self) -> bool {
        self.member.iter().all(|&m| m)
    }

    pub fn fraction(&self) -> f64 {
        self.member.iter().filter(|&&m| m).count() as f64 / self.member.len() as f64
    }
}

pub fn coincidence_set(team: &PolicyTable, strategic: &PolicyTable) -> Result<CoincidenceSet> {
    if team.grid != strategic.grid || team.choice.len() != strategic.choice.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} nodes",
            team.grid.len(),
            strategic.grid.len()
        )));
    }
    Ok(CoincidenceSet {
        grid: team.grid,
        member: team
            .choice
            .iter()
            .zip(&strategic.choice)
            .map(|(a, b)| a == b)
            .collect(),
    })
}

/// Switches of the subsidy rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MechanismConfig {
    /// Pay on the beliefs where the two policies differ. When false, pay on
    /// the beliefs where they agree instead.
    pub pay_on_difference_set: bool,
    /// Paid on top of the reporting cost.
    pub extra_bonus_delta: f64,
}

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig {
            pay_on_difference_set: true,
            extra_bonus_delta: 0.0,
        }
    }
}

/// Subsidy of `amount` per report, active on a set of grid nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncentiveScheme {
    pub grid: Grid,
    /// Inclusive node-index intervals, sorted and disjoint.
    pub pay_ranges: Vec<(usize, usize)>,
    pub amount: f64,
}

impl IncentiveScheme {
    pub fn none(grid: Grid) -> Self {
        IncentiveScheme {
            grid,
            pay_ranges: Vec::new(),
            amount: 0.0,
        }
    }

    pub fn from_flags(grid: Grid, pay: &[bool], amount: f64) -> Self {
        let mut pay_ranges = Vec::new();
        let mut start = None;
        for (i, &f) in pay.iter().enumerate() {
            match (f, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    pay_ranges.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            pay_ranges.push((s, pay.len() - 1));
        }
        IncentiveScheme {
            grid,
            pay_ranges,
            amount,
        }
    }

    pub fn pays_at_index(&self, i: usize) -> bool {
        self.pay_ranges.iter().any(|&(lo, hi)| lo <= i && i <= hi)
    }

    /// Membership of an arbitrary belief, decided by its nearest node.
    pub fn pays_at(&self, belief: Belief) -> bool {
        self.pays_at_index(self.grid.nearest(belief.p1()))
    }

    pub fn flags(&self) -> Vec<bool> {
        (0..self.grid.len()).map(|i| self.pays_at_index(i)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.pay_ranges.is_empty()
    }

    /// Transfer `t(π, a, b)` charged to the buyer; negative when paid.
    pub fn transfer(&self, belief: Belief, action: ActionPair) -> f64 {
        if action.reports() && self.pays_at(belief) {
            -self.amount
        } else {
            0.0
        }
    }

    /// Expected subsidy received by a buyer following `gamma`.
    pub fn expected_subsidy(&self, params: &Params, belief: Belief, gamma: &GammaFn) -> f64 {
        if self.amount == 0.0 || !self.pays_at(belief) {
            return 0.0;
        }
        self.amount * report_probability(params, belief, gamma)
    }
}

pub fn build_incentives(params: &Params, cs: &CoincidenceSet) -> IncentiveScheme {
    build_incentives_with(params, cs, &MechanismConfig::default())
}

pub fn build_incentives_with(params: &Params, cs: &CoincidenceSet, config: &MechanismConfig) -> IncentiveScheme {
    let pay: Vec<bool> = cs
        .member
        .iter()
        .map(|&m| m != config.pay_on_difference_set)
        .collect();
    IncentiveScheme::from_flags(cs.grid, &pay, params.c + config.extra_bonus_delta)
}

/// Value a buyer assigns to `gamma` once the subsidy is included.
pub fn effective_value(params: &Params, belief: Belief, gamma: &GammaFn, scheme: &IncentiveScheme) -> f64 {
    expected_reward(params, belief, gamma) + scheme.expected_subsidy(params, belief, gamma)
}

/// Rule a subsidized myopic buyer picks. Inside the pay set, ties go to a
/// rule that is informative and files a report; elsewhere to canonical
/// order.
pub fn incentivized_choice(
    params: &Params,
    belief: Belief,
    scheme: &IncentiveScheme,
    gamma_set: &[GammaFn],
) -> GammaFn {
    let values: Vec<f64> = gamma_set
        .iter()
        .map(|g| effective_value(params, belief, g, scheme))
        .collect();
    let (first, best) = argmax_first(&values);
    if scheme.amount > 0.0 && scheme.pays_at(belief) {
        let preferred = gamma_set
            .iter()
            .zip(&values)
            .find(|(g, &v)| v >= best - TIE_TOL && g.is_learning() && g.reports_any());
        if let Some((g, _)) = preferred {
            return *g;
        }
    }
    gamma_set[first]
}

pub fn incentivized_policy(
    params: &Params,
    scheme: &IncentiveScheme,
    gamma_set: &[GammaFn],
) -> Result<PolicyTable> {
    let set = canonical_set(gamma_set)?;
    let grid = Grid::new(params.grid_size);
    if scheme.grid != grid {
        return Err(Error::GridMismatch(format!(
            "scheme has {} nodes, params ask for {}",
            scheme.grid.len(),
            grid.len()
        )));
    }
    let choice = map_indexed(params.execution, grid.len(), |i| {
        incentivized_choice(params, grid.belief(i), scheme, &set)
    });
    Ok(PolicyTable {
        grid,
        choice,
        regime: Regime::Incentivized,
    })
}
