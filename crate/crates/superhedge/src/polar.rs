//! The support side: which paths are charged by at least one martingale
//! measure (plain or option-consistent), the complementary polar set, and the
//! classification of the market as arbitrage-free, one-point-arbitrage, or
//! admitting no martingale measure at all.

use crate::dual::{nonneg_bounds, polytope_rows, MeasureVector};
use crate::lp::{solve, LinearConstraint, LinearProgram, LpStatus, Relation};
use crate::market::{build_level_sets, LevelSetIndex, Market, PathSet, StrategyIndex};
use crate::rational::{ExtendedRational, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// The charged paths, their polar complement, and the charging measures.
#[derive(Debug, Clone)]
pub struct SupportReport {
    pub omega_star: PathSet,
    pub polar_set: PathSet,
    /// For each charged path, a measure charging it; empty when the report
    /// was produced by the iterative remover, which works without measures.
    pub per_path_witness: BTreeMap<usize, MeasureVector>,
    /// Equal-weight average of the per-path witnesses: one measure charging
    /// every path of omega_star at once.
    pub uniform_witness: Option<MeasureVector>,
    pub options_constrained: bool,
}

/// Paths charged by some martingale measure, decided per path by maximizing
/// that path's weight over the measure polytope.
pub fn compute_omega_star(market: &Market) -> SupportReport {
    support_by_path_lp(market, false)
}

/// Paths charged by some option-consistent martingale measure; always a
/// subset of the plain support set.
pub fn compute_omega_phi(market: &Market) -> SupportReport {
    support_by_path_lp(market, true)
}

fn support_by_path_lp(market: &Market, with_options: bool) -> SupportReport {
    let n = market.num_paths();
    let index = build_level_sets(market);
    let rows = polytope_rows(market, &index, with_options);
    let mut omega_star = PathSet::empty();
    let mut per_path_witness = BTreeMap::new();
    for i in 0..n {
        // any earlier optimizer charging this path already settles it
        if omega_star.contains(i) {
            continue;
        }
        let mut objective = vec![Rational::zero(); n];
        objective[i] = Rational::one();
        let mut lp = LinearProgram::maximize(objective, rows.clone());
        lp.bounds = nonneg_bounds(n);
        let outcome = solve(&lp);
        match outcome.status {
            LpStatus::Infeasible => break,
            LpStatus::Optimal => {
                if let ExtendedRational::Finite(v) = &outcome.value {
                    if v.is_positive() {
                        let witness = MeasureVector::from_weights(outcome.solution.unwrap());
                        for j in witness.support.iter() {
                            omega_star.insert(j);
                            per_path_witness.entry(j).or_insert_with(|| witness.clone());
                        }
                    }
                }
            }
            LpStatus::Unbounded => unreachable!("mass-one polytope is bounded"),
        }
    }
    let uniform_witness = average_measures(&per_path_witness);
    SupportReport {
        polar_set: omega_star.complement(n),
        omega_star,
        per_path_witness,
        uniform_witness,
        options_constrained: with_options,
    }
}

fn average_measures(witnesses: &BTreeMap<usize, MeasureVector>) -> Option<MeasureVector> {
    if witnesses.is_empty() {
        return None;
    }
    let n = witnesses.values().next().unwrap().weights.len();
    let count = Rational::from_integer(witnesses.len().into());
    let mut weights = vec![Rational::zero(); n];
    for witness in witnesses.values() {
        for (acc, w) in weights.iter_mut().zip(&witness.weights) {
            *acc = &*acc + &(w / &count);
        }
    }
    Some(MeasureVector::from_weights(weights))
}

/// The support set by iterated removal: per step and level-set group, find
/// holdings whose one-step gain is nonnegative on the surviving members and
/// positive somewhere, drop every member with a positive gain, and repeat
/// until no sweep removes anything. Must agree with `compute_omega_star`.
pub fn compute_omega_star_iterative(market: &Market) -> SupportReport {
    let n = market.num_paths();
    let index = build_level_sets(market);
    let mut alive = PathSet::all(n);
    loop {
        let mut removed_any = false;
        for t in 1..=market.steps {
            for members in &index.groups[t - 1] {
                let rows: Vec<usize> =
                    members.iter().copied().filter(|&i| alive.contains(i)).collect();
                if rows.is_empty() {
                    continue;
                }
                for &i in &removable_rows(market, t, &rows) {
                    alive.remove(i);
                    removed_any = true;
                }
            }
        }
        if !removed_any || alive.is_empty() {
            break;
        }
    }
    SupportReport {
        polar_set: alive.complement(n),
        omega_star: alive,
        per_path_witness: BTreeMap::new(),
        uniform_witness: None,
        options_constrained: false,
    }
}

/// One local LP: maximize the total capped slack of H over the given rows,
/// subject to nonnegative gain on each. At the optimum the slack is 1 on
/// exactly the removable rows, so one solve finds all of them.
fn removable_rows(market: &Market, t: usize, rows: &[usize]) -> Vec<usize> {
    let d = market.assets;
    let m = rows.len();
    // variables: d holdings (free), then one slack per row in [0, 1]
    let mut constraints = Vec::with_capacity(m);
    for (k, &i) in rows.iter().enumerate() {
        let mut coeffs = vec![Rational::zero(); d + m];
        for asset in 0..d {
            coeffs[asset] = market.increment(i, asset, t);
        }
        coeffs[d + k] = -Rational::one();
        constraints.push(LinearConstraint::new(coeffs, Relation::Ge, Rational::zero()));
    }
    let mut objective = vec![Rational::zero(); d + m];
    let mut bounds = vec![(None, None); d + m];
    for k in 0..m {
        objective[d + k] = Rational::one();
        bounds[d + k] = (Some(Rational::zero()), Some(Rational::one()));
    }
    let mut lp = LinearProgram::maximize(objective, constraints);
    lp.bounds = bounds;
    let outcome = solve(&lp);
    assert_eq!(outcome.status, LpStatus::Optimal, "slack LP is feasible and bounded");
    let solution = outcome.solution.unwrap();
    rows.iter()
        .enumerate()
        .filter(|(k, _)| {
            let gain: Rational =
                (0..d).map(|a| &solution[a] * market.increment(rows[*k], a, t)).sum();
            gain.is_positive()
        })
        .map(|(_, &i)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArbitrageTag {
    /// Every path is charged by some option-consistent martingale measure.
    FullyArbitrageFree,
    /// Some strategy gains on a nonempty polar set and loses nowhere.
    OnePointArbitrage,
    /// No option-consistent martingale measure exists; some strategy gains
    /// strictly on every path.
    NoMartingaleMeasure,
}

impl ArbitrageTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArbitrageTag::FullyArbitrageFree => "fully-arbitrage-free",
            ArbitrageTag::OnePointArbitrage => "one-point-arbitrage",
            ArbitrageTag::NoMartingaleMeasure => "no-martingale-measure",
        }
    }
}

/// A concrete strategy certifying the classification: dynamic holdings per
/// (step, group at step-1) plus a static position per option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbitrageWitness {
    pub dynamic: BTreeMap<(usize, usize), Vec<Rational>>,
    pub static_positions: Vec<Rational>,
}

impl ArbitrageWitness {
    /// Terminal gain along the path: dynamic trading gains plus the static
    /// positions' cost-adjusted payoffs.
    pub fn gain(&self, market: &Market, index: &LevelSetIndex, path: usize) -> Rational {
        let mut total = Rational::zero();
        for t in 1..=market.steps {
            let group = index.group_of[t - 1][path];
            if let Some(holdings) = self.dynamic.get(&(t, group)) {
                for (asset, h) in holdings.iter().enumerate() {
                    total = total + h * market.increment(path, asset, t);
                }
            }
        }
        for (h, option) in self.static_positions.iter().zip(&market.options) {
            total = total + h * &(&option.payoff[path] - &option.quoted_cost);
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct ArbitrageClass {
    pub tag: ArbitrageTag,
    pub witness: Option<ArbitrageWitness>,
}

/// Classifies the market by the size of the option-consistent support set
/// and produces a strategy witness for the two arbitrage classes.
pub fn classify(market: &Market) -> ArbitrageClass {
    let phi = compute_omega_phi(market);
    let n = market.num_paths();
    if phi.omega_star.is_empty() {
        let witness = strategy_witness(market, WitnessKind::EverywherePositive);
        return ArbitrageClass { tag: ArbitrageTag::NoMartingaleMeasure, witness: Some(witness) };
    }
    if phi.omega_star.len() == n {
        return ArbitrageClass { tag: ArbitrageTag::FullyArbitrageFree, witness: None };
    }
    let witness = strategy_witness(market, WitnessKind::SomewherePositive);
    ArbitrageClass { tag: ArbitrageTag::OnePointArbitrage, witness: Some(witness) }
}

enum WitnessKind {
    /// Maximize the worst-path gain (capped): positive value means a gain on
    /// every path.
    EverywherePositive,
    /// Maximize the total capped per-path gain: positive value means a
    /// nonnegative strategy gaining somewhere.
    SomewherePositive,
}

fn strategy_witness(market: &Market, kind: WitnessKind) -> ArbitrageWitness {
    let n = market.num_paths();
    let k = market.options.len();
    let index = build_level_sets(market);
    let vars = StrategyIndex::build(market, &index, &PathSet::all(n));
    let hn = vars.num_vars();
    let extra = match kind {
        WitnessKind::EverywherePositive => 1,
        WitnessKind::SomewherePositive => n,
    };
    let total = hn + k + extra;
    let mut constraints = Vec::with_capacity(n);
    for i in 0..n {
        let mut coeffs = vec![Rational::zero(); total];
        coeffs[..hn].clone_from_slice(&vars.gain_row(market, &index, i));
        for (j, option) in market.options.iter().enumerate() {
            coeffs[hn + j] = &option.payoff[i] - &option.quoted_cost;
        }
        match kind {
            WitnessKind::EverywherePositive => coeffs[hn + k] = -Rational::one(),
            WitnessKind::SomewherePositive => coeffs[hn + k + i] = -Rational::one(),
        }
        constraints.push(LinearConstraint::new(coeffs, Relation::Ge, Rational::zero()));
    }
    let mut objective = vec![Rational::zero(); total];
    let mut bounds: Vec<(Option<Rational>, Option<Rational>)> = vec![(None, None); total];
    for e in 0..extra {
        objective[hn + k + e] = Rational::one();
        bounds[hn + k + e] = match kind {
            WitnessKind::EverywherePositive => (None, Some(Rational::one())),
            WitnessKind::SomewherePositive => (Some(Rational::zero()), Some(Rational::one())),
        };
    }
    let mut lp = LinearProgram::maximize(objective, constraints);
    lp.bounds = bounds;
    let outcome = solve(&lp);
    assert_eq!(outcome.status, LpStatus::Optimal, "witness LP is feasible and bounded");
    match &outcome.value {
        ExtendedRational::Finite(v) => {
            assert!(v.is_positive(), "classification promised an arbitrage witness")
        }
        _ => unreachable!(),
    }
    let solution = outcome.solution.unwrap();
    let mut dynamic = BTreeMap::new();
    for (b, &(t, g)) in vars.blocks.iter().enumerate() {
        let holdings = solution[b * vars.assets..(b + 1) * vars.assets].to_vec();
        dynamic.insert((t, g), holdings);
    }
    let static_positions = solution[hn..hn + k].to_vec();
    ArbitrageWitness { dynamic, static_positions }
}
