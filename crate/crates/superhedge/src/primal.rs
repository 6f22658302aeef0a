//! The hedging side: a backward recursion over the level-set partition that
//! computes, per group and time, the least capital from which some
//! predictable strategy's wealth dominates the claim on a chosen target set,
//! together with the optimal holdings.

use crate::lp::{solve, LinearProgram, LpStatus, Relation};
use crate::market::{build_level_sets, project_support, LevelSetIndex, Market, PathSet, Payoff};
use crate::rational::{ExtendedRational, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, thiserror::Error)]
pub enum PrimalError {
    #[error("infinite target")]
    InfiniteTarget,
    #[error("empty target set")]
    EmptyTarget,
    #[error("price undefined for non-constant S_0; query root_prices")]
    MultipleRoots,
    #[error("no martingale measure charges any path")]
    EmptySupport,
}

/// Minimal cash and holdings dominating a family of one-step targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalHedge {
    pub cash: ExtendedRational,
    pub holdings: Vec<Rational>,
}

/// The least x with x + H·delta_i >= target_i for every finite target, and a
/// vertex-optimal H attaining it. Rows with target -inf are unconstrained and
/// dropped; with no rows left the cash requirement is -inf (holdings zero).
/// When some holdings gain strictly on every row the requirement collapses to
/// -inf as well. Finite targets always admit a minimizer otherwise.
pub fn local_superhedge(
    increments: &[Vec<Rational>],
    targets: &[ExtendedRational],
) -> Result<LocalHedge, PrimalError> {
    assert_eq!(increments.len(), targets.len(), "one target per increment row");
    if targets.iter().any(|t| matches!(t, ExtendedRational::PosInfinity)) {
        return Err(PrimalError::InfiniteTarget);
    }
    let d = increments.first().map(|row| row.len()).unwrap_or(0);
    let rows: Vec<(usize, &Rational)> = targets
        .iter()
        .enumerate()
        .filter_map(|(i, t)| match t {
            ExtendedRational::Finite(v) => Some((i, v)),
            _ => None,
        })
        .collect();
    if rows.is_empty() {
        return Ok(LocalHedge {
            cash: ExtendedRational::NegInfinity,
            holdings: vec![Rational::zero(); d],
        });
    }
    let constraints = rows
        .iter()
        .map(|(i, target)| {
            assert_eq!(increments[*i].len(), d, "increment rows share one width");
            let mut coeffs = Vec::with_capacity(d + 1);
            coeffs.push(Rational::one());
            coeffs.extend(increments[*i].iter().cloned());
            crate::lp::LinearConstraint::new(coeffs, Relation::Ge, (*target).clone())
        })
        .collect();
    let mut objective = vec![Rational::zero(); d + 1];
    objective[0] = Rational::one();
    let lp = LinearProgram::minimize(objective, constraints);
    let outcome = solve(&lp);
    match outcome.status {
        LpStatus::Optimal => {
            let solution = outcome.solution.unwrap();
            Ok(LocalHedge { cash: outcome.value, holdings: solution[1..].to_vec() })
        }
        LpStatus::Unbounded => Ok(LocalHedge {
            cash: ExtendedRational::NegInfinity,
            holdings: vec![Rational::zero(); d],
        }),
        LpStatus::Infeasible => unreachable!("large enough cash always dominates"),
    }
}

/// The value function and strategy of a full backward recursion.
///
/// `values[t][group]` is the least capital needed at that node to dominate
/// the claim on the target paths below it, and `strategy[t][group]` (t from 1,
/// group at t-1) the holdings chosen there. Groups with no target path below
/// them are unconstrained: value -inf, zero holdings.
#[derive(Debug, Clone)]
pub struct HedgePlan {
    pub values: Vec<Vec<ExtendedRational>>,
    pub strategy: Vec<Vec<Vec<Rational>>>,
    pub root_prices: BTreeMap<usize, ExtendedRational>,
    pub target_set: PathSet,
}

impl HedgePlan {
    /// Holdings on the step ending at `t`, looked up by the path's group at
    /// t-1.
    pub fn holdings_at(&self, index: &LevelSetIndex, t: usize, path: usize) -> &[Rational] {
        &self.strategy[t][index.group_of[t - 1][path]]
    }

    /// Terminal gain of the dynamic strategy along `path`.
    pub fn terminal_gain(&self, market: &Market, index: &LevelSetIndex, path: usize) -> Rational {
        let mut total = Rational::zero();
        for t in 1..=market.steps {
            for (asset, h) in self.holdings_at(index, t, path).iter().enumerate() {
                total = total + h * market.increment(path, asset, t);
            }
        }
        total
    }

    /// The single root value; None when S_0 is not constant across paths.
    pub fn unique_root_price(&self) -> Option<&ExtendedRational> {
        if self.root_prices.len() == 1 {
            self.root_prices.values().next()
        } else {
            None
        }
    }
}

/// Backward recursion for the least capital superhedging `g` on `target`.
///
/// The terminal value on each group is the largest target payoff among its
/// target members (duplicate trajectories must share one value); each earlier
/// value solves a local hedge against the child-group values. The returned
/// plan is checked exactly: along every target path with a finite value
/// chain, cash plus accumulated gains dominates the payoff.
pub fn superhedge(market: &Market, g: &Payoff, target: &PathSet) -> Result<HedgePlan, PrimalError> {
    assert_eq!(g.values.len(), market.num_paths());
    if target.is_empty() {
        return Err(PrimalError::EmptyTarget);
    }
    let index = build_level_sets(market);
    let steps = market.steps;
    let mut active: Vec<PathSet> = vec![PathSet::empty(); steps + 1];
    active[steps] = target.clone();
    for t in (0..steps).rev() {
        active[t] = project_support(&index, &active[t + 1], t);
    }

    let mut values: Vec<Vec<ExtendedRational>> = (0..=steps)
        .map(|t| vec![ExtendedRational::NegInfinity; index.groups[t].len()])
        .collect();
    let mut strategy: Vec<Vec<Vec<Rational>>> = (0..=steps)
        .map(|t| {
            if t == 0 {
                Vec::new()
            } else {
                vec![vec![Rational::zero(); market.assets]; index.groups[t - 1].len()]
            }
        })
        .collect();

    for (gid, members) in index.groups[steps].iter().enumerate() {
        let best = members
            .iter()
            .filter(|&&i| target.contains(i))
            .map(|&i| &g.values[i])
            .max();
        if let Some(v) = best {
            values[steps][gid] = ExtendedRational::Finite(v.clone());
        }
    }

    for t in (1..=steps).rev() {
        for (gid, members) in index.groups[t - 1].iter().enumerate() {
            if !members.iter().any(|&i| active[t - 1].contains(i)) {
                continue;
            }
            let mut seen_children = Vec::new();
            let mut increments = Vec::new();
            let mut targets = Vec::new();
            for &i in members {
                if !active[t].contains(i) {
                    continue;
                }
                let child = index.group_of[t][i];
                if seen_children.contains(&child) {
                    continue;
                }
                seen_children.push(child);
                increments
                    .push((0..market.assets).map(|a| market.increment(i, a, t)).collect());
                targets.push(values[t][child].clone());
            }
            let local = local_superhedge(&increments, &targets)?;
            values[t - 1][gid] = local.cash;
            strategy[t][gid] = local.holdings;
        }
    }

    let root_prices: BTreeMap<usize, ExtendedRational> =
        values[0].iter().cloned().enumerate().collect();
    let plan = HedgePlan { values, strategy, root_prices, target_set: target.clone() };
    verify_plan(market, &index, g, &plan);
    Ok(plan)
}

/// Exact pointwise audit of a finished plan; violations are internal bugs.
fn verify_plan(market: &Market, index: &LevelSetIndex, g: &Payoff, plan: &HedgePlan) {
    'paths: for i in plan.target_set.iter() {
        let mut wealth = match &plan.values[0][index.group_of[0][i]] {
            ExtendedRational::Finite(v) => v.clone(),
            _ => continue 'paths,
        };
        for t in 1..=market.steps {
            if !plan.values[t][index.group_of[t][i]].is_finite() {
                continue 'paths;
            }
            for (asset, h) in plan.holdings_at(index, t, i).iter().enumerate() {
                wealth = wealth + h * market.increment(i, asset, t);
            }
            let step_value = match &plan.values[t][index.group_of[t][i]] {
                ExtendedRational::Finite(v) => v.clone(),
                _ => unreachable!(),
            };
            assert!(
                wealth >= step_value,
                "plan violates the step inequality at path {:?}, time {t}",
                market.paths[i].id
            );
            wealth = step_value;
        }
        assert!(
            wealth >= g.values[i],
            "plan fails to dominate the payoff at path {:?}",
            market.paths[i].id
        );
    }
}

/// The superhedging price over the charged paths, from a single root.
/// An empty support prices every claim at -inf.
pub fn price(market: &Market, g: &Payoff) -> Result<ExtendedRational, PrimalError> {
    let index = build_level_sets(market);
    if index.groups[0].len() != 1 {
        return Err(PrimalError::MultipleRoots);
    }
    let star = crate::polar::compute_omega_star_iterative(market).omega_star;
    if star.is_empty() {
        return Ok(ExtendedRational::NegInfinity);
    }
    let plan = superhedge(market, g, &star)?;
    Ok(plan.root_prices[&0].clone())
}

#[derive(Debug, Clone)]
pub enum Replication {
    Replicable { cost: Rational, plan: HedgePlan },
    NotReplicable { gap: Rational },
}

/// A claim is replicable when superhedging it and its negative costs nothing
/// in total; the leftover `gap` is otherwise strictly positive.
pub fn check_replicable(market: &Market, g: &Payoff) -> Result<Replication, PrimalError> {
    let forward = match price(market, g)? {
        ExtendedRational::Finite(v) => v,
        _ => return Err(PrimalError::EmptySupport),
    };
    let negated = Payoff { values: g.values.iter().map(|v| -v).collect() };
    let backward = match price(market, &negated)? {
        ExtendedRational::Finite(v) => v,
        _ => return Err(PrimalError::EmptySupport),
    };
    let gap = &forward + &backward;
    if gap.is_zero() {
        let star = crate::polar::compute_omega_star_iterative(market).omega_star;
        let plan = superhedge(market, g, &star)?;
        Ok(Replication::Replicable { cost: forward, plan })
    } else {
        assert!(gap.is_positive(), "hedging both signs can never profit");
        Ok(Replication::NotReplicable { gap })
    }
}
