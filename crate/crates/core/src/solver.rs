//! Average-reward dynamic program of the common agent.
//!
//! The belief interval is discretized on a uniform grid and the relative
//! value function is represented by its values at the nodes, with linear
//! interpolation in between. Relative value iteration pins the value at
//! the node closest to one half and stops once the span of successive
//! backup differences falls below `vi_tol`.

use serde::{Deserialize, Serialize};

use crate::belief::{expected_reward, successor_branches, successor_distribution, Belief};
use crate::error::{Error, Result};
use crate::exec::{fill_indexed, map_indexed};
use crate::grid::Grid;
use crate::model::{GammaFn, Params};

/// Two candidate values closer than this are treated as tied and resolved
/// by canonical rule order.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Team,
    Strategic,
    Incentivized,
}

/// Converged relative value function and gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub rho: f64,
    pub ref_index: usize,
    pub iterations: usize,
    pub span: f64,
    /// Rules the table was solved over, in canonical order.
    pub gamma_set: Vec<GammaFn>,
}

impl ValueTable {
    pub fn value_at(&self, belief: Belief) -> f64 {
        self.grid.interpolate(&self.values, belief.p1())
    }
}

/// Chosen rule at every grid node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub grid: Grid,
    pub choice: Vec<GammaFn>,
    pub regime: Regime,
}

impl PolicyTable {
    /// Rule at the node nearest to `belief`.
    pub fn lookup(&self, belief: Belief) -> GammaFn {
        self.choice[self.grid.nearest(belief.p1())]
    }

    pub fn uniform(grid: Grid, gamma: GammaFn, regime: Regime) -> Self {
        PolicyTable {
            grid,
            choice: vec![gamma; grid.len()],
            regime,
        }
    }
}

/// Sorted, deduplicated copy of a rule set.
pub fn canonical_set(gamma_set: &[GammaFn]) -> Result<Vec<GammaFn>> {
    if gamma_set.is_empty() {
        return Err(Error::EmptyGammaSet);
    }
    let mut out = gamma_set.to_vec();
    out.sort_by_key(GammaFn::id);
    out.dedup();
    Ok(out)
}

/// Index of the first value within [`TIE_TOL`] of the maximum, and the
/// maximum itself.
pub(crate) fn argmax_first(values: &[f64]) -> (usize, f64) {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let idx = values
        .iter()
        .position(|&v| v >= best - TIE_TOL)
        .expect("nonempty candidate list");
    (idx, best)
}

/// One Bellman backup at an arbitrary belief: the maximum over `gamma_set`
/// of immediate expected reward plus the expected interpolated relative
/// value of the next belief, and the maximizing rule.
pub fn bellman_backup(
    params: &Params,
    table: &ValueTable,
    belief: Belief,
    gamma_set: &[GammaFn],
) -> (f64, GammaFn) {
    let set = canonical_set(gamma_set).expect("bellman_backup needs a nonempty rule set");
    let values: Vec<f64> = set
        .iter()
        .map(|g| q_value(params, table, belief, g))
        .collect();
    let (i, best) = argmax_first(&values);
    (best, set[i])
}

fn q_value(params: &Params, table: &ValueTable, belief: Belief, gamma: &GammaFn) -> f64 {
    let cont: f64 = successor_branches(params, belief, gamma)
        .iter()
        .flatten()
        .map(|b| b.prob * table.value_at(b.next))
        .sum();
    expected_reward(params, belief, gamma) + cont
}

/// Greedy rule with respect to a solved table at an exact belief, over the
/// rules the table was solved with. Same tie rule as [`bellman_backup`].
pub fn greedy_choice(params: &Params, table: &ValueTable, belief: Belief) -> GammaFn {
    let set = &table.gamma_set;
    let mut q = [0.0; GammaFn::COUNT];
    for (slot, g) in q.iter_mut().zip(set) {
        *slot = q_value(params, table, belief, g);
    }
    set[argmax_first(&q[..set.len()]).0]
}

/// `|ρ + V(π) − max_γ (R̂ + E V)|` at a probe belief.
pub fn bellman_residual(params: &Params, vt: &ValueTable, _pt: &PolicyTable, probe: Belief) -> f64 {
    let (backup, _) = bellman_backup(params, vt, probe, &vt.gamma_set);
    (vt.rho + vt.value_at(probe) - backup).abs()
}

/// Backup of one (node, rule) pair flattened to a reward and at most four
/// weighted node references.
#[derive(Clone, Copy, Debug, Default)]
struct Stencil {
    reward: f64,
    nodes: [(usize, f64); 4],
}

impl Stencil {
    #[inline]
    fn apply(&self, values: &[f64]) -> f64 {
        let mut cont = 0.0;
        for &(j, w) in &self.nodes {
            cont += w * values[j];
        }
        self.reward + cont
    }
}

/// Precomputed transition structure of the discretized problem.
struct Model {
    rules: usize,
    stencils: Vec<Stencil>,
}

impl Model {
    fn build(params: &Params, grid: Grid, set: &[GammaFn]) -> Self {
        let rules = set.len();
        let per_node: Vec<Vec<Stencil>> = map_indexed(params.execution, grid.len(), |i| {
            let b = grid.belief(i);
            set.iter()
                .map(|g| {
                    let mut s = Stencil {
                        reward: expected_reward(params, b, g),
                        ..Stencil::default()
                    };
                    for (k, br) in successor_distribution(params, b, g).iter().enumerate() {
                        let (lo, w) = grid.locate(br.next.p1());
                        s.nodes[2 * k] = (lo, br.prob * (1.0 - w));
                        s.nodes[2 * k + 1] = (lo + 1, br.prob * w);
                    }
                    s
                })
                .collect()
        });
        Model {
            rules,
            stencils: per_node.into_iter().flatten().collect(),
        }
    }

    fn node(&self, i: usize) -> &[Stencil] {
        &self.stencils[i * self.rules..(i + 1) * self.rules]
    }

    fn backup_node(&self, values: &[f64], i: usize) -> f64 {
        self.node(i)
            .iter()
            .map(|s| s.apply(values))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn argmax_node(&self, values: &[f64], i: usize) -> usize {
        let q: Vec<f64> = self.node(i).iter().map(|s| s.apply(values)).collect();
        argmax_first(&q).0
    }
}

/// Solves the average-reward program over `gamma_set` by relative value
/// iteration.
pub fn solve_average_reward(params: &Params, gamma_set: &[GammaFn]) -> Result<(ValueTable, PolicyTable)> {
    params.validate()?;
    let set = canonical_set(gamma_set)?;
    let grid = Grid::new(params.grid_size);
    let model = Model::build(params, grid, &set);
    let n = grid.len();
    let r = grid.ref_index();

    let mut values = vec![0.0; n];
    let mut backup = vec![0.0; n];
    let mut prev_backup = vec![0.0; n];
    let mut span = f64::INFINITY;

    for it in 1..=params.max_iters {
        fill_indexed(params.execution, &mut backup, |i| model.backup_node(&values, i));
        if it > 1 {
            span = span_of_difference(&backup, &prev_backup);
            if span < params.vi_tol {
                let rho = backup[r];
                let choice = map_indexed(params.execution, n, |i| set[model.argmax_node(&values, i)]);
                let vt = ValueTable {
                    grid,
                    values,
                    rho,
                    ref_index: r,
                    iterations: it,
                    span,
                    gamma_set: set,
                };
                let pt = PolicyTable {
                    grid,
                    choice,
                    regime: Regime::Team,
                };
                return Ok((vt, pt));
            }
        }
        let pin = backup[r];
        for (v, w) in values.iter_mut().zip(&backup) {
            *v = w - pin;
        }
        std::mem::swap(&mut backup, &mut prev_backup);
    }
    Err(Error::NonConvergence {
        iterations: params.max_iters,
        span,
    })
}

fn span_of_difference(a: &[f64], b: &[f64]) -> f64 {
    let (lo, hi) = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    hi - lo
}
