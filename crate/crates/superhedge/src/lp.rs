//! Exact linear programming over rationals.
//!
//! Two phase primal simplex with Bland's anti-cycling rule. Solutions are
//! basic (vertex) solutions, duals and infeasibility certificates are exact,
//! and the whole pipeline is deterministic: identical inputs take identical
//! pivot sequences.

use crate::rational::{ExtendedRational, Rational};
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> Self {
        LinearConstraint { coeffs, relation, rhs }
    }

    pub fn holds_at(&self, x: &[Rational]) -> bool {
        let lhs: Rational = self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

/// Optional lower and upper bound per variable.
pub type VarBound = (Option<Rational>, Option<Rational>);

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Rational>,
    pub constraints: Vec<LinearConstraint>,
    /// One entry per variable, or empty for all free. A `(Some(0), None)`
    /// bound is kept as a nonnegative column; every other finite bound is
    /// materialized as an extra constraint row, see `expanded_constraints`.
    pub bounds: Vec<VarBound>,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<Rational>, constraints: Vec<LinearConstraint>) -> Self {
        LinearProgram { sense: Sense::Minimize, objective, constraints, bounds: Vec::new() }
    }

    pub fn maximize(objective: Vec<Rational>, constraints: Vec<LinearConstraint>) -> Self {
        LinearProgram { sense: Sense::Maximize, objective, constraints, bounds: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn bound(&self, j: usize) -> VarBound {
        if self.bounds.is_empty() { (None, None) } else { self.bounds[j].clone() }
    }

    fn is_native_nonneg(&self, j: usize) -> bool {
        matches!(self.bound(j), (Some(l), _) if l.is_zero())
    }

    /// The user constraints followed by the bound rows this solver
    /// materializes: for each variable in order, its lower bound row (unless
    /// the lower bound is exactly zero, which stays a nonnegative column)
    /// and then its upper bound row. Duals and infeasibility certificates
    /// are indexed by this list.
    pub fn expanded_constraints(&self) -> Vec<LinearConstraint> {
        let n = self.num_vars();
        let mut rows = self.constraints.clone();
        for j in 0..n {
            let (lo, hi) = self.bound(j);
            let mut unit = vec![Rational::zero(); n];
            unit[j] = Rational::one();
            if let Some(l) = lo {
                if !l.is_zero() {
                    rows.push(LinearConstraint::new(unit.clone(), Relation::Ge, l));
                }
            }
            if let Some(u) = hi {
                rows.push(LinearConstraint::new(unit, Relation::Le, u));
            }
        }
        rows
    }

    /// Exact feasibility of a point, including the variable bounds.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        assert_eq!(x.len(), self.num_vars());
        self.expanded_constraints().iter().all(|c| c.holds_at(x))
            && (0..self.num_vars())
                .all(|j| !self.is_native_nonneg(j) || !x[j].is_negative())
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Finite at an optimum; -inf for an unbounded minimum and +inf for an
    /// unbounded maximum; the empty-domain conventions (+inf for min, -inf
    /// for max) when infeasible.
    pub value: ExtendedRational,
    pub solution: Option<Vec<Rational>>,
    /// One multiplier per expanded constraint. For a minimum, <= rows carry
    /// nonpositive and >= rows nonnegative multipliers; signs flip for a
    /// maximum. Always satisfies value = sum(dual_i * rhs_i) exactly.
    pub dual_solution: Option<Vec<Rational>>,
}

#[derive(Debug, Clone)]
pub enum FeasibilityOutcome {
    Feasible {
        witness: Vec<Rational>,
    },
    /// `certificate` has one multiplier per expanded constraint, nonnegative
    /// on <= rows, nonpositive on >= rows, free on equalities. Aggregating
    /// the rows with these weights yields the contradiction 0 <= -1:
    /// the weighted coefficient sums vanish on free variables and are
    /// nonnegative on nonnegative variables, while the weighted rhs sum
    /// is exactly -1.
    Infeasible {
        certificate: Vec<Rational>,
    },
}

/// Checks that a certificate really refutes the expanded system.
pub fn certificate_refutes(lp: &LinearProgram, certificate: &[Rational]) -> bool {
    let rows = lp.expanded_constraints();
    if certificate.len() != rows.len() {
        return false;
    }
    for (lam, row) in certificate.iter().zip(&rows) {
        match row.relation {
            Relation::Le => {
                if lam.is_negative() {
                    return false;
                }
            }
            Relation::Ge => {
                if lam.is_positive() {
                    return false;
                }
            }
            Relation::Eq => {}
        }
    }
    for j in 0..lp.num_vars() {
        let combo: Rational = certificate
            .iter()
            .zip(&rows)
            .map(|(lam, row)| lam * &row.coeffs[j])
            .sum();
        if lp.is_native_nonneg(j) {
            if combo.is_negative() {
                return false;
            }
        } else if !combo.is_zero() {
            return false;
        }
    }
    let total: Rational = certificate.iter().zip(&rows).map(|(lam, row)| lam * &row.rhs).sum();
    total.is_negative()
}

/// Checks an optimal outcome end to end: primal feasibility, objective
/// agreement, dual sign conditions, dual feasibility on every column and
/// exact strong duality. Returns a description of the first violation.
pub fn check_optimal_certificate(lp: &LinearProgram, out: &LpOutcome) -> Result<(), String> {
    if out.status != LpStatus::Optimal {
        return Err("outcome is not optimal".into());
    }
    let x = out.solution.as_ref().ok_or("missing solution")?;
    let y = out.dual_solution.as_ref().ok_or("missing dual solution")?;
    if !lp.is_feasible(x) {
        return Err("solution violates a constraint".into());
    }
    let value = lp.objective_value(x);
    if ExtendedRational::Finite(value.clone()) != out.value {
        return Err("reported value differs from the objective at the solution".into());
    }
    let rows = lp.expanded_constraints();
    if y.len() != rows.len() {
        return Err("dual length mismatch".into());
    }
    // sign conditions and complementary slackness
    for (yi, row) in y.iter().zip(&rows) {
        let ok_sign = match (lp.sense, row.relation) {
            (_, Relation::Eq) => true,
            (Sense::Minimize, Relation::Le) | (Sense::Maximize, Relation::Ge) => {
                !yi.is_positive()
            }
            (Sense::Minimize, Relation::Ge) | (Sense::Maximize, Relation::Le) => {
                !yi.is_negative()
            }
        };
        if !ok_sign {
            return Err("dual sign condition violated".into());
        }
        if !yi.is_zero() {
            let lhs: Rational = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            if lhs != row.rhs {
                return Err("complementary slackness violated".into());
            }
        }
    }
    // dual feasibility per column: equality on free variables, one-sided on
    // nonnegative columns (with x_j > 0 forcing equality)
    for j in 0..lp.num_vars() {
        let aty: Rational = y.iter().zip(&rows).map(|(yi, row)| yi * &row.coeffs[j]).sum();
        let diff = &lp.objective[j] - &aty;
        if lp.is_native_nonneg(j) {
            let ok = match lp.sense {
                Sense::Minimize => !diff.is_negative(),
                Sense::Maximize => !diff.is_positive(),
            };
            if !ok {
                return Err("reduced cost sign violated on a nonnegative column".into());
            }
            if x[j].is_positive() && !diff.is_zero() {
                return Err("complementary slackness violated on a nonnegative column".into());
            }
        } else if !diff.is_zero() {
            return Err("dual infeasibility on a free column".into());
        }
    }
    let dual_value: Rational = y.iter().zip(&rows).map(|(yi, row)| yi * &row.rhs).sum();
    if dual_value != value {
        return Err("strong duality violated".into());
    }
    Ok(())
}

// internal standard form: min cost * z over Az = b, z >= 0, b >= 0

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Pos(usize),
    Neg(usize),
    Slack(usize),
    Artificial(usize),
}

struct Prepared {
    ncols: usize,
    col_kinds: Vec<ColKind>,
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    flip: Vec<bool>,
    cost: Vec<Rational>, // phase 2 costs in minimize sense
    num_rows: usize,
}

fn prepare(lp: &LinearProgram) -> Prepared {
    let n = lp.num_vars();
    assert!(
        lp.constraints.iter().all(|c| c.coeffs.len() == n),
        "constraint arity mismatch"
    );
    assert!(
        lp.bounds.is_empty() || lp.bounds.len() == n,
        "bounds arity mismatch"
    );
    let rows = lp.expanded_constraints();
    let m = rows.len();

    let mut col_kinds = Vec::new();
    for j in 0..n {
        col_kinds.push(ColKind::Pos(j));
        if !lp.is_native_nonneg(j) {
            col_kinds.push(ColKind::Neg(j));
        }
    }
    let mut flip = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut relations = Vec::with_capacity(m);
    for row in &rows {
        let f = row.rhs.is_negative();
        flip.push(f);
        b.push(if f { -row.rhs.clone() } else { row.rhs.clone() });
        let rel = if f {
            match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            }
        } else {
            row.relation
        };
        relations.push(rel);
    }
    for (r, rel) in relations.iter().enumerate() {
        if *rel != Relation::Eq {
            col_kinds.push(ColKind::Slack(r));
        }
    }
    for (r, rel) in relations.iter().enumerate() {
        if *rel != Relation::Le {
            col_kinds.push(ColKind::Artificial(r));
        }
    }
    let ncols = col_kinds.len();
    let mut a = vec![vec![Rational::zero(); ncols]; m];
    for (k, kind) in col_kinds.iter().enumerate() {
        match *kind {
            ColKind::Pos(j) => {
                for r in 0..m {
                    let v = &rows[r].coeffs[j];
                    a[r][k] = if flip[r] { -v.clone() } else { v.clone() };
                }
            }
            ColKind::Neg(j) => {
                for r in 0..m {
                    let v = &rows[r].coeffs[j];
                    a[r][k] = if flip[r] { v.clone() } else { -v.clone() };
                }
            }
            ColKind::Slack(r) => {
                a[r][k] = match relations[r] {
                    Relation::Le => Rational::one(),
                    Relation::Ge => -Rational::one(),
                    Relation::Eq => unreachable!(),
                };
            }
            ColKind::Artificial(r) => {
                a[r][k] = Rational::one();
            }
        }
    }
    let sign = match lp.sense {
        Sense::Minimize => Rational::one(),
        Sense::Maximize => -Rational::one(),
    };
    let mut cost = vec![Rational::zero(); ncols];
    for (k, kind) in col_kinds.iter().enumerate() {
        match *kind {
            ColKind::Pos(j) => cost[k] = &sign * &lp.objective[j],
            ColKind::Neg(j) => cost[k] = -(&sign * &lp.objective[j]),
            _ => {}
        }
    }
    Prepared { ncols, col_kinds, a, b, flip, cost, num_rows: m }
}

struct Tableau {
    m: usize,
    ncols: usize,
    rows: Vec<Vec<Rational>>, // m x (ncols + 1), last column is the rhs
    basis: Vec<usize>,
    zrow: Vec<Rational>, // ncols + 1 entries of reduced costs
    pivots: usize,
}

const PIVOT_LIMIT: usize = 1_000_000;

impl Tableau {
    fn new(prep: &Prepared) -> Self {
        let m = prep.num_rows;
        let mut rows = Vec::with_capacity(m);
        for r in 0..m {
            let mut row = prep.a[r].clone();
            row.push(prep.b[r].clone());
            rows.push(row);
        }
        // initial basis: slack on <= rows, artificial elsewhere
        let mut basis = vec![usize::MAX; m];
        for (k, kind) in prep.col_kinds.iter().enumerate() {
            match *kind {
                ColKind::Slack(r) => {
                    if prep.a[r][k].is_one() {
                        basis[r] = k;
                    }
                }
                ColKind::Artificial(r) => basis[r] = k,
                _ => {}
            }
        }
        assert!(basis.iter().all(|&k| k != usize::MAX), "row without initial basis");
        Tableau { m, ncols: prep.ncols, rows, basis, zrow: Vec::new(), pivots: 0 }
    }

    fn set_costs(&mut self, cost: &[Rational]) {
        let mut z: Vec<Rational> = cost.to_vec();
        z.push(Rational::zero());
        for r in 0..self.m {
            let cb = cost[self.basis[r]].clone();
            if !cb.is_zero() {
                for j in 0..=self.ncols {
                    let delta = &cb * &self.rows[r][j];
                    z[j] -= delta;
                }
            }
        }
        self.zrow = z;
    }

    fn pivot(&mut self, r: usize, e: usize) {
        self.pivots += 1;
        assert!(self.pivots <= PIVOT_LIMIT, "pivot limit exceeded");
        let pivot = self.rows[r][e].clone();
        assert!(!pivot.is_zero(), "zero pivot");
        if !pivot.is_one() {
            for v in self.rows[r].iter_mut() {
                *v /= &pivot;
            }
        }
        let pivot_row = self.rows[r].clone();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let factor = self.rows[i][e].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..=self.ncols {
                let delta = &factor * &pivot_row[j];
                self.rows[i][j] -= delta;
            }
        }
        let factor = self.zrow[e].clone();
        if !factor.is_zero() {
            for j in 0..=self.ncols {
                let delta = &factor * &pivot_row[j];
                self.zrow[j] -= delta;
            }
        }
        self.basis[r] = e;
    }

    /// One Bland step: enter the lowest-index improving column, leave by the
    /// minimum ratio with ties broken by the lowest basic column index.
    fn bland_step(&mut self, barred: &[bool]) -> StepOutcome {
        let mut entering = None;
        for j in 0..self.ncols {
            if !barred[j] && self.zrow[j].is_negative() {
                entering = Some(j);
                break;
            }
        }
        let e = match entering {
            Some(e) => e,
            None => return StepOutcome::Optimal,
        };
        let mut best: Option<(Rational, usize, usize)> = None; // ratio, basis var, row
        for r in 0..self.m {
            if self.rows[r][e].is_positive() {
                let ratio = &self.rows[r][self.ncols] / &self.rows[r][e];
                let candidate = (ratio, self.basis[r], r);
                best = match best {
                    None => Some(candidate),
                    Some(cur) => {
                        if candidate.0 < cur.0 || (candidate.0 == cur.0 && candidate.1 < cur.1) {
                            Some(candidate)
                        } else {
                            Some(cur)
                        }
                    }
                };
            }
        }
        match best {
            Some((_, _, r)) => {
                self.pivot(r, e);
                StepOutcome::Pivoted
            }
            None => StepOutcome::Unbounded,
        }
    }

    fn run(&mut self, barred: &[bool]) -> PhaseEnd {
        loop {
            match self.bland_step(barred) {
                StepOutcome::Optimal => return PhaseEnd::Optimal,
                StepOutcome::Unbounded => return PhaseEnd::Unbounded,
                StepOutcome::Pivoted => {}
            }
        }
    }

    fn basic_values(&self) -> Vec<(usize, Rational)> {
        (0..self.m)
            .map(|r| (self.basis[r], self.rows[r][self.ncols].clone()))
            .collect()
    }
}

enum StepOutcome {
    Pivoted,
    Optimal,
    Unbounded,
}

#[derive(PartialEq, Eq)]
enum PhaseEnd {
    Optimal,
    Unbounded,
}

/// Solves B^T y = c_B exactly for the dual vector of a basis.
fn basis_duals(prep: &Prepared, basis: &[usize], cost: &[Rational]) -> Vec<Rational> {
    let m = prep.num_rows;
    // build the m x m system (B^T)(y) = c_B
    let mut mat = vec![vec![Rational::zero(); m + 1]; m];
    for (i, &col) in basis.iter().enumerate() {
        for r in 0..m {
            mat[i][r] = prep.a[r][col].clone();
        }
        mat[i][m] = cost[col].clone();
    }
    // Gaussian elimination, exact
    let mut piv_row = 0;
    let mut piv_of_col: Vec<Option<usize>> = vec![None; m];
    for col in 0..m {
        let mut found = None;
        for r in piv_row..m {
            if !mat[r][col].is_zero() {
                found = Some(r);
                break;
            }
        }
        let r = match found {
            Some(r) => r,
            None => continue,
        };
        mat.swap(piv_row, r);
        let p = mat[piv_row][col].clone();
        for v in mat[piv_row].iter_mut() {
            *v /= &p;
        }
        let prow = mat[piv_row].clone();
        for i in 0..m {
            if i != piv_row && !mat[i][col].is_zero() {
                let f = mat[i][col].clone();
                for j in 0..=m {
                    let delta = &f * &prow[j];
                    mat[i][j] -= delta;
                }
            }
        }
        piv_of_col[col] = Some(piv_row);
        piv_row += 1;
        if piv_row == m {
            break;
        }
    }
    let mut y = vec![Rational::zero(); m];
    for (col, piv) in piv_of_col.iter().enumerate() {
        if let Some(r) = piv {
            y[col] = mat[*r][m].clone();
        }
    }
    y
}

fn phase_one(prep: &Prepared, tableau: &mut Tableau) -> Option<Vec<Rational>> {
    let art_cost: Vec<Rational> = prep
        .col_kinds
        .iter()
        .map(|k| match k {
            ColKind::Artificial(_) => Rational::one(),
            _ => Rational::zero(),
        })
        .collect();
    tableau.set_costs(&art_cost);
    let barred = vec![false; prep.ncols];
    let end = tableau.run(&barred);
    assert!(end == PhaseEnd::Optimal, "phase one cannot be unbounded");
    let value: Rational = tableau
        .basic_values()
        .iter()
        .map(|(col, v)| &art_cost[*col] * v)
        .sum();
    if value.is_positive() {
        // infeasible: phase one duals give the refutation
        let y = basis_duals(prep, &tableau.basis, &art_cost);
        let mut cert = Vec::with_capacity(prep.num_rows);
        for r in 0..prep.num_rows {
            let mut lam = -y[r].clone() / &value;
            if prep.flip[r] {
                lam = -lam;
            }
            cert.push(lam);
        }
        return Some(cert);
    }
    // drive basic artificials out where a structural pivot exists; rows with
    // none are redundant and their artificial stays pinned at zero
    for r in 0..tableau.m {
        if matches!(prep.col_kinds[tableau.basis[r]], ColKind::Artificial(_)) {
            let pivot_col = (0..prep.ncols).find(|&j| {
                !matches!(prep.col_kinds[j], ColKind::Artificial(_))
                    && !tableau.rows[r][j].is_zero()
            });
            if let Some(j) = pivot_col {
                tableau.pivot(r, j);
            }
        }
    }
    None
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let prep = prepare(lp);
    let mut tableau = Tableau::new(&prep);
    if phase_one(&prep, &mut tableau).is_some() {
        let value = match lp.sense {
            Sense::Minimize => ExtendedRational::PosInfinity,
            Sense::Maximize => ExtendedRational::NegInfinity,
        };
        return LpOutcome { status: LpStatus::Infeasible, value, solution: None, dual_solution: None };
    }
    let barred: Vec<bool> = prep
        .col_kinds
        .iter()
        .map(|k| matches!(k, ColKind::Artificial(_)))
        .collect();
    tableau.set_costs(&prep.cost);
    match tableau.run(&barred) {
        PhaseEnd::Unbounded => {
            let value = match lp.sense {
                Sense::Minimize => ExtendedRational::NegInfinity,
                Sense::Maximize => ExtendedRational::PosInfinity,
            };
            LpOutcome { status: LpStatus::Unbounded, value, solution: None, dual_solution: None }
        }
        PhaseEnd::Optimal => {
            let n = lp.num_vars();
            let mut x = vec![Rational::zero(); n];
            for (col, v) in tableau.basic_values() {
                match prep.col_kinds[col] {
                    ColKind::Pos(j) => x[j] += v,
                    ColKind::Neg(j) => x[j] -= v,
                    _ => {}
                }
            }
            let value = lp.objective_value(&x);
            let y_int = basis_duals(&prep, &tableau.basis, &prep.cost);
            let sense_sign = match lp.sense {
                Sense::Minimize => Rational::one(),
                Sense::Maximize => -Rational::one(),
            };
            let dual: Vec<Rational> = (0..prep.num_rows)
                .map(|r| {
                    let mut v = y_int[r].clone();
                    if prep.flip[r] {
                        v = -v;
                    }
                    &sense_sign * v
                })
                .collect();
            LpOutcome {
                status: LpStatus::Optimal,
                value: ExtendedRational::Finite(value),
                solution: Some(x),
                dual_solution: Some(dual),
            }
        }
    }
}

/// Decides feasibility of the constraint system of `lp` (objective ignored).
pub fn solve_feasibility(lp: &LinearProgram) -> FeasibilityOutcome {
    let prep = prepare(lp);
    let mut tableau = Tableau::new(&prep);
    match phase_one(&prep, &mut tableau) {
        Some(certificate) => FeasibilityOutcome::Infeasible { certificate },
        None => {
            let n = lp.num_vars();
            let mut x = vec![Rational::zero(); n];
            for (col, v) in tableau.basic_values() {
                match prep.col_kinds[col] {
                    ColKind::Pos(j) => x[j] += v,
                    ColKind::Neg(j) => x[j] -= v,
                    _ => {}
                }
            }
            FeasibilityOutcome::Feasible { witness: x }
        }
    }
}
