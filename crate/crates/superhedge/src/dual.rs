//! Measure-side analysis: probability vectors on paths with zero conditional
//! price increments (and, optionally, exact option pricing), the best model
//! value sup E_Q[g] over that polytope, cone membership, and enumeration of
//! the polytope's vertex measures.

use crate::lp::{solve, solve_feasibility, FeasibilityOutcome, LinearConstraint, LinearProgram, LpStatus, Relation, VarBound};
use crate::market::{build_level_sets, LevelSetIndex, Market, PathSet, Payoff, StrategyIndex};
use crate::rational::{ExtendedRational, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeSet, VecDeque};

/// A probability vector on the paths of a fixed market whose conditional
/// expected price increments vanish on every level set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureVector {
    pub weights: Vec<Rational>,
    pub support: PathSet,
}

impl MeasureVector {
    pub fn from_weights(weights: Vec<Rational>) -> MeasureVector {
        let support =
            PathSet::from_iter(weights.iter().enumerate().filter(|(_, w)| w.is_positive()).map(|(i, _)| i));
        MeasureVector { weights, support }
    }

    pub fn expectation(&self, values: &[Rational]) -> Rational {
        assert_eq!(values.len(), self.weights.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Exact check of all defining constraints; with `priced_options` the
    /// cost-adjusted expectation of every option must vanish too.
    pub fn validate(&self, market: &Market, priced_options: bool) -> Result<(), String> {
        if self.weights.len() != market.num_paths() {
            return Err(format!(
                "weight count {} does not match path count {}",
                self.weights.len(),
                market.num_paths()
            ));
        }
        if let Some(i) = self.weights.iter().position(|w| w.is_negative()) {
            return Err(format!("weight of path {:?} is negative", market.paths[i].id));
        }
        let total: Rational = self.weights.iter().cloned().sum();
        if !total.is_one() {
            return Err(format!("weights sum to {}, not 1", total));
        }
        let support = PathSet::from_iter(
            self.weights.iter().enumerate().filter(|(_, w)| w.is_positive()).map(|(i, _)| i),
        );
        if support != self.support {
            return Err("support does not match the positive weights".into());
        }
        let index = build_level_sets(market);
        for t in 1..=market.steps {
            for members in &index.groups[t - 1] {
                for asset in 0..market.assets {
                    let drift: Rational = members
                        .iter()
                        .map(|&i| &self.weights[i] * market.increment(i, asset, t))
                        .sum();
                    if !drift.is_zero() {
                        return Err(format!(
                            "conditional increment of asset {asset} over step {t} on the \
                             group of path {:?} is {drift}, not 0",
                            market.paths[members[0]].id
                        ));
                    }
                }
            }
        }
        if priced_options {
            for option in &market.options {
                let adjusted: Rational = self
                    .weights
                    .iter()
                    .zip(&option.payoff)
                    .map(|(w, p)| w * &(p - &option.quoted_cost))
                    .sum();
                if !adjusted.is_zero() {
                    return Err(format!(
                        "option {:?} has expected cost-adjusted payoff {adjusted}, not 0",
                        option.id
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DualReport {
    pub value: ExtendedRational,
    pub optimizer: Option<MeasureVector>,
    pub constrained_by_options: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum DualError {
    #[error("cone undefined without martingale measures")]
    ConeUndefined,
}

/// Equality rows cutting the measure polytope out of the nonnegative orthant:
/// total mass one, zero conditional increments per (step, group, asset), and
/// optionally zero expected cost-adjusted payoff per option.
pub(crate) fn polytope_rows(
    market: &Market,
    index: &LevelSetIndex,
    with_options: bool,
) -> Vec<LinearConstraint> {
    let n = market.num_paths();
    let mut rows = Vec::new();
    rows.push(LinearConstraint::new(vec![Rational::one(); n], Relation::Eq, Rational::one()));
    for t in 1..=market.steps {
        for members in &index.groups[t - 1] {
            for asset in 0..market.assets {
                let mut coeffs = vec![Rational::zero(); n];
                for &i in members {
                    coeffs[i] = market.increment(i, asset, t);
                }
                rows.push(LinearConstraint::new(coeffs, Relation::Eq, Rational::zero()));
            }
        }
    }
    if with_options {
        for option in &market.options {
            let coeffs: Vec<Rational> =
                option.payoff.iter().map(|p| p - &option.quoted_cost).collect();
            rows.push(LinearConstraint::new(coeffs, Relation::Eq, Rational::zero()));
        }
    }
    rows
}

pub(crate) fn nonneg_bounds(n: usize) -> Vec<VarBound> {
    vec![(Some(Rational::zero()), None); n]
}

/// Best model value: maximize E_Q[g] over the measure polytope. The value is
/// -inf exactly when the polytope is empty; otherwise the optimizer is a
/// vertex measure attaining the value.
pub fn dual_value(market: &Market, g: &Payoff, with_options: bool) -> DualReport {
    assert_eq!(g.values.len(), market.num_paths());
    let index = build_level_sets(market);
    let mut lp = LinearProgram::maximize(g.values.clone(), polytope_rows(market, &index, with_options));
    lp.bounds = nonneg_bounds(market.num_paths());
    let outcome = solve(&lp);
    debug_assert_ne!(outcome.status, LpStatus::Unbounded, "mass-one polytope is bounded");
    let optimizer = outcome.solution.map(MeasureVector::from_weights);
    if let Some(q) = &optimizer {
        debug_assert_eq!(ExtendedRational::Finite(q.expectation(&g.values)), outcome.value);
    }
    DualReport { value: outcome.value, optimizer, constrained_by_options: with_options }
}

/// Decides whether some martingale measure exists at all, without ranging
/// over single paths.
pub fn has_martingale_measure(market: &Market, with_options: bool) -> bool {
    let index = build_level_sets(market);
    let mut lp = LinearProgram::minimize(
        vec![Rational::zero(); market.num_paths()],
        polytope_rows(market, &index, with_options),
    );
    lp.bounds = nonneg_bounds(market.num_paths());
    matches!(solve_feasibility(&lp), FeasibilityOutcome::Feasible { .. })
}

/// Membership of g in the cone of claims superhedgeable from zero capital on
/// the support set: true iff every measure values g at most 0. The measure
/// criterion and the zero-cost hedging LP are both evaluated and must agree.
pub fn in_cone(market: &Market, g: &Payoff) -> Result<bool, DualError> {
    let star = crate::polar::compute_omega_star_iterative(market);
    if star.omega_star.is_empty() {
        return Err(DualError::ConeUndefined);
    }
    let by_dual = match dual_value(market, g, false).value {
        ExtendedRational::Finite(v) => !v.is_positive(),
        _ => unreachable!("nonempty polytope has a finite optimum"),
    };

    let index = build_level_sets(market);
    let vars = StrategyIndex::build(market, &index, &star.omega_star);
    let rows: Vec<LinearConstraint> = star
        .omega_star
        .iter()
        .map(|i| {
            LinearConstraint::new(vars.gain_row(market, &index, i), Relation::Ge, g.values[i].clone())
        })
        .collect();
    let lp = LinearProgram::minimize(vec![Rational::zero(); vars.num_vars()], rows);
    let by_primal = matches!(solve_feasibility(&lp), FeasibilityOutcome::Feasible { .. });
    assert_eq!(by_dual, by_primal, "measure and hedging cone tests disagree");
    Ok(by_dual)
}

#[derive(Debug, Clone)]
pub struct VertexEnumeration {
    pub vertices: Vec<MeasureVector>,
    pub truncated: bool,
}

/// Hard ceiling on visited bases, so degenerate polytopes cannot stall the
/// walk; hitting it sets the truncation flag.
const BASIS_VISIT_CAP: usize = 20_000;

/// All vertex measures of the (option-)martingale polytope, in lexicographic
/// weight order, truncated at `cap` entries.
pub fn enumerate_vertices(market: &Market, with_options: bool, cap: usize) -> VertexEnumeration {
    let index = build_level_sets(market);
    let n = market.num_paths();
    let rows = polytope_rows(market, &index, with_options);
    let matrix: Vec<Vec<Rational>> = rows.iter().map(|r| r.coeffs.clone()).collect();
    let rhs: Vec<Rational> = rows.iter().map(|r| r.rhs.clone()).collect();
    let reduced = match reduce_rows(matrix, rhs) {
        Some(r) => r,
        None => return VertexEnumeration { vertices: Vec::new(), truncated: false },
    };

    let mut lp = LinearProgram::minimize(vec![Rational::zero(); n], rows);
    lp.bounds = nonneg_bounds(n);
    let start = match solve_feasibility(&lp) {
        FeasibilityOutcome::Feasible { witness } => witness,
        FeasibilityOutcome::Infeasible { .. } => {
            return VertexEnumeration { vertices: Vec::new(), truncated: false }
        }
    };
    let start_basis = complete_basis(&reduced.0, &start);

    let mut visited: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut queue: VecDeque<Vec<usize>> = VecDeque::new();
    let mut points: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let mut truncated = false;
    visited.insert(start_basis.clone());
    queue.push_back(start_basis);

    while let Some(basis) = queue.pop_front() {
        let (point, directions) = basis_point_and_directions(&reduced.0, &reduced.1, &basis, n);
        if !points.contains(&point) {
            if points.len() == cap {
                truncated = true;
                break;
            }
            points.insert(point.clone());
        }
        let basic_values: Vec<Rational> = basis.iter().map(|&j| point[j].clone()).collect();
        for (enter, direction) in &directions {
            for (pos, d) in direction.iter().enumerate() {
                if d.is_zero() {
                    continue;
                }
                let theta = &basic_values[pos] / d;
                if theta.is_negative() {
                    continue;
                }
                // step stays inside the orthant iff every basic coordinate
                // survives the move
                if basic_values
                    .iter()
                    .zip(direction)
                    .any(|(v, dk)| (v - &(&theta * dk)).is_negative())
                {
                    continue;
                }
                let mut next: Vec<usize> =
                    basis.iter().enumerate().map(|(k, &j)| if k == pos { *enter } else { j }).collect();
                next.sort_unstable();
                if visited.len() >= BASIS_VISIT_CAP {
                    truncated = true;
                    continue;
                }
                if visited.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    if !queue.is_empty() {
        truncated = true;
    }
    let vertices = points.into_iter().map(MeasureVector::from_weights).collect();
    VertexEnumeration { vertices, truncated }
}

/// Gaussian elimination of (A, b) to an independent row set; None when a row
/// reduces to 0 = c with c nonzero (empty polytope).
fn reduce_rows(
    mut a: Vec<Vec<Rational>>,
    mut b: Vec<Rational>,
) -> Option<(Vec<Vec<Rational>>, Vec<Rational>)> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut kept: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(pivot) = (row..m).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(row, pivot);
        b.swap(row, pivot);
        let p = a[row][col].clone();
        for r in 0..m {
            if r != row && !a[r][col].is_zero() {
                let factor = &a[r][col] / &p;
                for c in 0..n {
                    let delta = &factor * &a[row][c];
                    a[r][c] = &a[r][c] - &delta;
                }
                let delta = &factor * &b[row];
                b[r] = &b[r] - &delta;
            }
        }
        kept.push(row);
        row += 1;
        if row == m {
            break;
        }
    }
    for r in row..m {
        if !b[r].is_zero() {
            return None;
        }
    }
    let a_kept: Vec<Vec<Rational>> = kept.iter().map(|&r| a[r].clone()).collect();
    let b_kept: Vec<Rational> = kept.iter().map(|&r| b[r].clone()).collect();
    Some((a_kept, b_kept))
}

/// Extends the support of a feasible point to a column basis of the reduced
/// matrix, greedily by column index.
fn complete_basis(a: &[Vec<Rational>], point: &[Rational]) -> Vec<usize> {
    let r = a.len();
    let n = point.len();
    let mut basis: Vec<usize> = Vec::with_capacity(r);
    let mut work: Vec<Vec<Rational>> = Vec::new();
    let try_add = |work: &mut Vec<Vec<Rational>>, col: usize| -> bool {
        let mut v: Vec<Rational> = (0..r).map(|i| a[i][col].clone()).collect();
        for w in work.iter() {
            let lead = w.iter().position(|x| !x.is_zero()).unwrap();
            if !v[lead].is_zero() {
                let factor = &v[lead] / &w[lead];
                for i in 0..r {
                    let delta = &factor * &w[i];
                    v[i] = &v[i] - &delta;
                }
            }
        }
        if v.iter().all(|x| x.is_zero()) {
            false
        } else {
            work.push(v);
            true
        }
    };
    for j in 0..n {
        if point[j].is_positive() {
            let added = try_add(&mut work, j);
            assert!(added, "support of a vertex is linearly independent");
            basis.push(j);
        }
    }
    for j in 0..n {
        if basis.len() == r {
            break;
        }
        if !basis.contains(&j) && try_add(&mut work, j) {
            basis.push(j);
        }
    }
    assert_eq!(basis.len(), r, "reduced matrix has full row rank");
    basis.sort_unstable();
    basis
}

/// Solves the basis system once, returning the full-length basic point and,
/// per nonbasic column, the movement direction of the basic coordinates.
fn basis_point_and_directions(
    a: &[Vec<Rational>],
    b: &[Rational],
    basis: &[usize],
    n: usize,
) -> (Vec<Rational>, Vec<(usize, Vec<Rational>)>) {
    let r = a.len();
    // augmented columns: b, then every nonbasic column of a
    let nonbasic: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();
    let mut tableau: Vec<Vec<Rational>> = (0..r)
        .map(|i| {
            let mut row: Vec<Rational> = basis.iter().map(|&j| a[i][j].clone()).collect();
            row.push(b[i].clone());
            row.extend(nonbasic.iter().map(|&j| a[i][j].clone()));
            row
        })
        .collect();
    let width = r + 1 + nonbasic.len();
    for col in 0..r {
        let pivot = (col..r).find(|&i| !tableau[i][col].is_zero()).expect("basis is invertible");
        tableau.swap(col, pivot);
        let p = tableau[col][col].clone();
        for c in 0..width {
            tableau[col][c] = &tableau[col][c] / &p;
        }
        for i in 0..r {
            if i != col && !tableau[i][col].is_zero() {
                let factor = tableau[i][col].clone();
                for c in 0..width {
                    let delta = &factor * &tableau[col][c];
                    tableau[i][c] = &tableau[i][c] - &delta;
                }
            }
        }
    }
    let mut point = vec![Rational::zero(); n];
    for (pos, &j) in basis.iter().enumerate() {
        point[j] = tableau[pos][r].clone();
        debug_assert!(!point[j].is_negative(), "walk stays inside the feasible region");
    }
    let directions = nonbasic
        .iter()
        .enumerate()
        .map(|(k, &j)| (j, (0..r).map(|i| tableau[i][r + 1 + k].clone()).collect()))
        .collect();
    (point, directions)
}
