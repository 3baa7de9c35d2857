//! Primitive objects of the sequential-buyer model: the hidden product
//! quality, private signals, buyer actions, the per-period reward, and the
//! sixteen decision rules a common agent can prescribe.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Violation};
use crate::exec::Execution;

/// Hidden value of the product in a period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    /// Low intrinsic value (`x = 0`).
    Bad,
    /// High intrinsic value (`x = 1`).
    Good,
}

impl State {
    pub const ALL: [State; 2] = [State::Bad, State::Good];

    pub fn index(self) -> usize {
        match self {
            State::Bad => 0,
            State::Good => 1,
        }
    }
}

/// Private noisy signal a buyer receives about the current state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observation {
    Low,
    High,
}

impl Observation {
    pub const ALL: [Observation; 2] = [Observation::Low, Observation::High];

    pub fn index(self) -> usize {
        match self {
            Observation::Low => 0,
            Observation::High => 1,
        }
    }

    /// The observation that agrees with `state`.
    pub fn matching(state: State) -> Self {
        match state {
            State::Bad => Observation::Low,
            State::Good => Observation::High,
        }
    }
}

/// Whether the buyer files a (truthful) report of its observation.
///
/// Kept as its own two-valued type so the silent symbol never takes part in
/// arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Report {
    Silent,
    Truthful,
}

/// The pair of actions `(a, b)` a buyer takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionPair {
    pub buy: bool,
    pub report: Report,
}

impl ActionPair {
    pub const fn new(buy: bool, report: Report) -> Self {
        ActionPair { buy, report }
    }

    /// Canonical index: buy-major, silent before report.
    pub fn index(self) -> usize {
        (self.buy as usize) * 2 + (self.report == Report::Truthful) as usize
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < 4, "action pair index out of range: {i}");
        let report = if i % 2 == 1 {
            Report::Truthful
        } else {
            Report::Silent
        };
        ActionPair::new(i >= 2, report)
    }

    pub fn reports(self) -> bool {
        self.report == Report::Truthful
    }
}

impl fmt::Display for ActionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = if self.reports() { "1" } else { "*" };
        write!(f, "(buy={},report={})", self.buy as u8, b)
    }
}

/// What later buyers see from one period: the action pair and, when a
/// report was filed, the observation it carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PublicOutcome {
    pub action: ActionPair,
    pub revealed: Option<Observation>,
}

impl PublicOutcome {
    /// Outcome of a buyer taking `action` after seeing `obs`.
    pub fn of(action: ActionPair, obs: Observation) -> Self {
        PublicOutcome {
            action,
            revealed: action.reports().then_some(obs),
        }
    }

    /// Outcome without a report. Panics if `action` reports, since a
    /// report always carries an observation.
    pub fn silent(action: ActionPair) -> Self {
        assert!(!action.reports(), "a reporting outcome must carry an observation");
        PublicOutcome {
            action,
            revealed: None,
        }
    }
}

impl From<ActionPair> for PublicOutcome {
    fn from(action: ActionPair) -> Self {
        PublicOutcome::silent(action)
    }
}

/// Whether the public outcome of a decision rule discloses anything about
/// the private observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GammaKind {
    Learning,
    NonLearning,
}

/// Decision rule prescribed by the common agent: one action pair for each
/// possible private observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GammaFn {
    pub on_v0: ActionPair,
    pub on_v1: ActionPair,
    pub kind: GammaKind,
    pub dominated: bool,
}

/// Rules crossed out in the classification table, as
/// `(on_v0, on_v1)` canonical action-pair indices.
const DOMINATED: [(usize, usize); 8] = [
    (1, 3), // [0,1 ; 1,1]
    (3, 1), // [1,1 ; 0,1]
    (1, 2), // [0,1 ; 1,*]
    (3, 0), // [1,1 ; 0,*]
    (0, 3), // [0,* ; 1,1]
    (2, 1), // [1,* ; 0,1]
    (1, 1), // [0,1 ; 0,1]
    (3, 3), // [1,1 ; 1,1]
];

impl GammaFn {
    pub const COUNT: usize = 16;

    /// Rule with canonical id `id` in `0..16`.
    pub fn from_id(id: usize) -> Self {
        assert!(id < Self::COUNT, "gamma id out of range: {id}");
        let (i0, i1) = (id / 4, id % 4);
        let on_v0 = ActionPair::from_index(i0);
        let on_v1 = ActionPair::from_index(i1);
        let same = PublicOutcome::of(on_v0, Observation::Low)
            == PublicOutcome::of(on_v1, Observation::High);
        GammaFn {
            on_v0,
            on_v1,
            kind: if same {
                GammaKind::NonLearning
            } else {
                GammaKind::Learning
            },
            dominated: DOMINATED.contains(&(i0, i1)),
        }
    }

    pub fn from_pairs(on_v0: ActionPair, on_v1: ActionPair) -> Self {
        Self::from_id(on_v0.index() * 4 + on_v1.index())
    }

    pub fn id(&self) -> usize {
        self.on_v0.index() * 4 + self.on_v1.index()
    }

    pub fn act(&self, obs: Observation) -> ActionPair {
        match obs {
            Observation::Low => self.on_v0,
            Observation::High => self.on_v1,
        }
    }

    pub fn outcome(&self, obs: Observation) -> PublicOutcome {
        PublicOutcome::of(self.act(obs), obs)
    }

    pub fn is_learning(&self) -> bool {
        self.kind == GammaKind::Learning
    }

    /// True if the rule files a report for at least one observation.
    pub fn reports_any(&self) -> bool {
        self.on_v0.reports() || self.on_v1.reports()
    }

    /// Never buy, never report.
    pub fn abstain() -> Self {
        Self::from_id(0)
    }

    /// Buy exactly when the signal is high, never report.
    pub fn follow() -> Self {
        Self::from_id(2)
    }

    /// Always buy, never report.
    pub fn always_buy() -> Self {
        Self::from_id(10)
    }
}

impl fmt::Display for GammaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v0→{}, v1→{}", self.on_v0, self.on_v1)
    }
}

/// All sixteen decision rules in canonical order.
pub fn enumerate_gammas() -> Vec<GammaFn> {
    (0..GammaFn::COUNT).map(GammaFn::from_id).collect()
}

/// The eight rules that survive the dominance classification.
pub fn non_dominated_gammas() -> Vec<GammaFn> {
    enumerate_gammas()
        .into_iter()
        .filter(|g| !g.dominated)
        .collect()
}

/// Model constants plus solver and simulation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Per-period probability that the product quality flips.
    pub epsilon: f64,
    /// Crossover probability of the observation channel.
    pub p: f64,
    /// Cost of filing a report.
    pub c: f64,
    /// Prior probability that the product is good in the first period.
    pub initial_belief: f64,
    pub grid_size: usize,
    pub vi_tol: f64,
    pub max_iters: usize,
    pub horizon: usize,
    pub burn_in: usize,
    pub num_replications: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            epsilon: 0.001,
            p: 0.2,
            c: 0.05,
            initial_belief: 0.5,
            grid_size: 1001,
            vi_tol: 1e-9,
            max_iters: 1_000_000,
            horizon: 1_000_000,
            burn_in: 10_000,
            num_replications: 20,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl Params {
    /// Every invariant the parameters break, empty when valid.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, field: &str, value: String, constraint: &str| {
            if !ok {
                out.push(Violation::new(field, value, constraint));
            }
        };
        check(
            self.epsilon > 0.0 && self.epsilon < 1.0,
            "epsilon",
            self.epsilon.to_string(),
            "epsilon must lie in (0,1)",
        );
        check(
            self.p > 0.0 && self.p < 0.5,
            "p",
            self.p.to_string(),
            "p must lie in (0, 1/2)",
        );
        check(
            self.c >= 0.0 && self.c.is_finite(),
            "c",
            self.c.to_string(),
            "c must be a finite nonnegative number",
        );
        check(
            (0.0..=1.0).contains(&self.initial_belief),
            "initial_belief",
            self.initial_belief.to_string(),
            "initial_belief must lie in [0,1]",
        );
        check(
            self.grid_size >= 3,
            "grid_size",
            self.grid_size.to_string(),
            "grid_size must be at least 3",
        );
        check(
            self.vi_tol > 0.0,
            "vi_tol",
            self.vi_tol.to_string(),
            "vi_tol must be positive",
        );
        check(
            self.max_iters >= 1,
            "max_iters",
            self.max_iters.to_string(),
            "max_iters must be positive",
        );
        check(
            self.horizon >= 1,
            "horizon",
            self.horizon.to_string(),
            "horizon must be positive",
        );
        check(
            self.num_replications >= 1,
            "num_replications",
            self.num_replications.to_string(),
            "num_replications must be positive",
        );
        out
    }

    pub fn validate(&self) -> Result<(), Error> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v))
        }
    }
}

/// Probability of moving from `from` to `to` in one period.
pub fn state_kernel(params: &Params, from: State, to: State) -> f64 {
    if from == to {
        1.0 - params.epsilon
    } else {
        params.epsilon
    }
}

/// Probability of observing `obs` when the state is `state`.
pub fn obs_kernel(params: &Params, state: State, obs: Observation) -> f64 {
    if obs == Observation::matching(state) {
        1.0 - params.p
    } else {
        params.p
    }
}

/// Per-period reward of a buyer.
pub fn reward(params: &Params, state: State, action: ActionPair) -> f64 {
    let report_cost = if action.reports() { params.c } else { 0.0 };
    let value = match (action.buy, state) {
        (false, _) => 0.0,
        (true, State::Good) => 0.5,
        (true, State::Bad) => -0.5,
    };
    value - report_cost
}
