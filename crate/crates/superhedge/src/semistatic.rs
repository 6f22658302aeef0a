//! Semi-static superhedging: dynamic trading in the assets combined with a
//! fixed buy-and-hold position in the quoted options, priced on the set of
//! paths charged by option-consistent martingale measures.

use crate::lp::{solve, LinearConstraint, LinearProgram, LpStatus, Relation, Sense};
use crate::market::{build_level_sets, Market, PathSet, Payoff, StrategyIndex};
use crate::polar::compute_omega_phi;
use crate::primal::{superhedge, HedgePlan};
use crate::rational::{ExtendedRational, Rational};
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, thiserror::Error)]
pub enum SemiStaticError {
    #[error("no option-consistent martingale measure")]
    NoConsistentMeasure,
}

/// Cash, static option positions and a dynamic plan dominating the claim on
/// the hedge set: price + dynamic gains + h·(payoff - cost) >= g there.
#[derive(Debug, Clone)]
pub struct SemiStaticPlan {
    pub price: ExtendedRational,
    pub static_positions: Vec<Rational>,
    pub dynamic_plan: HedgePlan,
    pub hedge_set: PathSet,
}

impl SemiStaticPlan {
    /// Wealth minus claim at a path of the hedge set; nonnegative by
    /// construction.
    pub fn surplus(&self, market: &Market, g: &Payoff, path: usize) -> Rational {
        let index = build_level_sets(market);
        let mut wealth = match &self.price {
            ExtendedRational::Finite(v) => v.clone(),
            _ => unreachable!("a plan always carries a finite price"),
        };
        wealth = wealth + self.dynamic_plan.terminal_gain(market, &index, path);
        for (h, option) in self.static_positions.iter().zip(&market.options) {
            wealth = wealth + h * &(&option.payoff[path] - &option.quoted_cost);
        }
        wealth - &g.values[path]
    }
}

fn adjusted_payoff(market: &Market, g: &Payoff, h: &[Rational]) -> Payoff {
    assert_eq!(h.len(), market.options.len());
    let values = (0..market.num_paths())
        .map(|i| {
            let mut v = g.values[i].clone();
            for (hj, option) in h.iter().zip(&market.options) {
                v = v - hj * &(&option.payoff[i] - &option.quoted_cost);
            }
            v
        })
        .collect();
    Payoff { values }
}

/// Least cash so that some semi-static strategy dominates `g` on the hedge
/// set, solved as one LP over cash, option positions and per-group holdings.
/// With several roots the price is the worst root's requirement.
pub fn semistatic_price(market: &Market, g: &Payoff) -> Result<SemiStaticPlan, SemiStaticError> {
    assert_eq!(g.values.len(), market.num_paths());
    let hedge_set = compute_omega_phi(market).omega_star;
    if hedge_set.is_empty() {
        return Err(SemiStaticError::NoConsistentMeasure);
    }
    let index = build_level_sets(market);
    let vars = StrategyIndex::build(market, &index, &hedge_set);
    let k = market.options.len();
    let hn = vars.num_vars();
    let total = 1 + k + hn;
    let constraints: Vec<LinearConstraint> = hedge_set
        .iter()
        .map(|i| {
            let mut coeffs = vec![Rational::zero(); total];
            coeffs[0] = Rational::one();
            for (j, option) in market.options.iter().enumerate() {
                coeffs[1 + j] = &option.payoff[i] - &option.quoted_cost;
            }
            coeffs[1 + k..].clone_from_slice(&vars.gain_row(market, &index, i));
            LinearConstraint::new(coeffs, Relation::Ge, g.values[i].clone())
        })
        .collect();
    let mut objective = vec![Rational::zero(); total];
    objective[0] = Rational::one();
    let outcome = solve(&LinearProgram::minimize(objective, constraints));
    assert_eq!(
        outcome.status,
        LpStatus::Optimal,
        "a nonempty hedge set keeps the price finite"
    );
    let solution = outcome.solution.unwrap();
    let static_positions = solution[1..1 + k].to_vec();

    let residual = adjusted_payoff(market, g, &static_positions);
    let dynamic_plan =
        superhedge(market, &residual, &hedge_set).expect("hedge set is a valid target");
    let worst_root = dynamic_plan
        .root_prices
        .values()
        .max()
        .expect("at least one root")
        .clone();
    assert_eq!(worst_root, outcome.value, "dynamic recursion agrees with the joint optimum");

    Ok(SemiStaticPlan {
        price: outcome.value,
        static_positions,
        dynamic_plan,
        hedge_set,
    })
}

/// Lower envelope over a supplied grid of static positions: for each h, the
/// dynamic-only price of the h-adjusted claim on the hedge set (worst root).
/// Never below `semistatic_price`, with equality when the grid contains an
/// optimal h.
pub fn semistatic_via_scan(
    market: &Market,
    g: &Payoff,
    h_grid: &[Vec<Rational>],
) -> Result<ExtendedRational, SemiStaticError> {
    let hedge_set = compute_omega_phi(market).omega_star;
    if hedge_set.is_empty() {
        return Err(SemiStaticError::NoConsistentMeasure);
    }
    let mut best: Option<ExtendedRational> = None;
    for h in h_grid {
        let residual = adjusted_payoff(market, g, h);
        let plan = superhedge(market, &residual, &hedge_set).expect("hedge set is a valid target");
        let value = plan.root_prices.values().max().expect("at least one root").clone();
        best = Some(match best {
            Some(b) if b <= value => b,
            _ => value,
        });
    }
    Ok(best.expect("scan needs a nonempty grid"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisViolation {
    /// Some measure on the hedge set values the option above its quote.
    PositiveMaximum,
    /// Some measure on the hedge set values the option below its quote.
    NegativeMinimum,
}

impl HypothesisViolation {
    pub fn as_str(&self) -> &'static str {
        match self {
            HypothesisViolation::PositiveMaximum => "max-positive",
            HypothesisViolation::NegativeMinimum => "min-negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HypothesisReport {
    Holds,
    Fails { option_id: String, direction: HypothesisViolation, value: Rational },
}

impl HypothesisReport {
    pub fn holds(&self) -> bool {
        matches!(self, HypothesisReport::Holds)
    }
}

/// Whether every martingale measure supported inside the hedge set already
/// prices every option exactly: for each option, the extremes of its
/// cost-adjusted expectation over such measures must both be zero. An empty
/// hedge set holds vacuously (no such measures exist).
pub fn check_theorem_hypothesis(market: &Market) -> HypothesisReport {
    let hedge_set = compute_omega_phi(market).omega_star;
    if hedge_set.is_empty() {
        return HypothesisReport::Holds;
    }
    let n = market.num_paths();
    let index = build_level_sets(market);
    let rows = crate::dual::polytope_rows(market, &index, false);
    let mut bounds = crate::dual::nonneg_bounds(n);
    for i in 0..n {
        if !hedge_set.contains(i) {
            bounds[i] = (Some(Rational::zero()), Some(Rational::zero()));
        }
    }
    for option in &market.options {
        let objective: Vec<Rational> =
            option.payoff.iter().map(|p| p - &option.quoted_cost).collect();
        for (sense, direction) in [
            (Sense::Maximize, HypothesisViolation::PositiveMaximum),
            (Sense::Minimize, HypothesisViolation::NegativeMinimum),
        ] {
            let lp = LinearProgram {
                sense,
                objective: objective.clone(),
                constraints: rows.clone(),
                bounds: bounds.clone(),
            };
            let outcome = solve(&lp);
            assert_eq!(outcome.status, LpStatus::Optimal, "hedge-set measures exist");
            let value = match outcome.value {
                ExtendedRational::Finite(v) => v,
                _ => unreachable!(),
            };
            let violated = match direction {
                HypothesisViolation::PositiveMaximum => value.is_positive(),
                HypothesisViolation::NegativeMinimum => value.is_negative(),
            };
            if violated {
                return HypothesisReport::Fails {
                    option_id: option.id.clone(),
                    direction,
                    value,
                };
            }
        }
    }
    HypothesisReport::Holds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::dual_value;
    use crate::market::{load_market, StaticOption};
    use crate::primal::price;
    use crate::rational::{int, rat};

    fn fin(v: Rational) -> ExtendedRational {
        ExtendedRational::Finite(v)
    }

    fn binomial() -> Market {
        load_market(
            br#"{"assets":1,"steps":1,"paths":[
                {"id":"up","prices":[["1","2"]]},
                {"id":"down","prices":[["1","1/2"]]}]}"#,
        )
        .unwrap()
    }

    fn trinomial() -> Market {
        load_market(
            br#"{"assets":1,"steps":1,"paths":[
                {"id":"half","prices":[["1","1/2"]]},
                {"id":"flat","prices":[["1","1"]]},
                {"id":"double","prices":[["1","2"]]}]}"#,
        )
        .unwrap()
    }

    fn trinomial_with_digital(cost: Rational) -> Market {
        let mut market = trinomial();
        market.options = vec![StaticOption {
            id: "digital-top".into(),
            payoff: vec![int(0), int(0), int(1)],
            quoted_cost: cost,
        }];
        market
    }

    #[test]
    fn no_options_degenerates_to_dynamic_price() {
        let market = trinomial();
        let g = Payoff { values: vec![int(0), int(0), int(1)] };
        let plan = semistatic_price(&market, &g).unwrap();
        assert_eq!(plan.price, price(&market, &g).unwrap());
        assert_eq!(plan.price, fin(rat(1, 3)));
        assert!(plan.static_positions.is_empty());
    }

    #[test]
    fn quoted_option_pins_the_price() {
        // with the digital itself on the menu, hedging the digital is free
        let market = trinomial_with_digital(rat(1, 10));
        let g = Payoff { values: vec![int(0), int(0), int(1)] };
        let plan = semistatic_price(&market, &g).unwrap();
        assert_eq!(plan.price, fin(rat(1, 10)));
        let charged: Vec<usize> = plan.hedge_set.iter().collect();
        for i in charged {
            assert!(!plan.surplus(&market, &g, i).is_negative());
        }
        let dual = dual_value(&market, &g, true);
        assert_eq!(plan.price, dual.value);
    }

    #[test]
    fn options_never_raise_the_price() {
        let bare = trinomial();
        let quoted = trinomial_with_digital(rat(1, 10));
        let g = Payoff { values: vec![int(1), int(0), int(2)] };
        let without = semistatic_price(&bare, &g).unwrap().price;
        let with = semistatic_price(&quoted, &g).unwrap().price;
        assert!(with <= without);
    }

    #[test]
    fn empty_hedge_set_is_an_error() {
        let mut market = binomial();
        // quoting the asset forward above any consistent value empties the set
        market.options = vec![StaticOption {
            id: "forward".into(),
            payoff: vec![int(2), rat(1, 2)],
            quoted_cost: int(2),
        }];
        let g = Payoff { values: vec![int(0), int(0)] };
        assert!(matches!(
            semistatic_price(&market, &g),
            Err(SemiStaticError::NoConsistentMeasure)
        ));
        assert!(matches!(
            semistatic_via_scan(&market, &g, &[vec![int(0)]]),
            Err(SemiStaticError::NoConsistentMeasure)
        ));
    }

    #[test]
    fn scan_dominates_and_meets_the_optimum() {
        let market = trinomial_with_digital(rat(1, 10));
        let g = Payoff { values: vec![int(0), int(0), int(1)] };
        let plan = semistatic_price(&market, &g).unwrap();
        let at_zero = semistatic_via_scan(&market, &g, &[vec![int(0)]]).unwrap();
        assert!(at_zero >= plan.price);
        let with_optimum = semistatic_via_scan(
            &market,
            &g,
            &[vec![int(0)], plan.static_positions.clone()],
        )
        .unwrap();
        assert_eq!(with_optimum, plan.price);
    }

    #[test]
    fn scan_without_options_is_the_dynamic_price() {
        let market = trinomial();
        let g = Payoff { values: vec![int(2), int(0), int(1)] };
        let scanned = semistatic_via_scan(&market, &g, &[vec![]]).unwrap();
        assert_eq!(scanned, price(&market, &g).unwrap());
    }

    #[test]
    fn hypothesis_holds_for_redundant_quotes() {
        let mut market = binomial();
        market.options = vec![StaticOption {
            id: "forward".into(),
            payoff: vec![int(2), rat(1, 2)],
            quoted_cost: int(1),
        }];
        assert_eq!(check_theorem_hypothesis(&market), HypothesisReport::Holds);
    }

    #[test]
    fn hypothesis_fails_when_the_hedge_set_hides_disagreement() {
        // the digital keeps every path charged, yet plain martingale
        // measures on those paths still disagree with its quote
        let market = trinomial_with_digital(rat(1, 10));
        match check_theorem_hypothesis(&market) {
            HypothesisReport::Fails { option_id, direction, value } => {
                assert_eq!(option_id, "digital-top");
                assert_eq!(direction, HypothesisViolation::PositiveMaximum);
                assert_eq!(value, rat(7, 30));
            }
            HypothesisReport::Holds => panic!("quote disagreement must be reported"),
        }
    }

    #[test]
    fn duality_with_options_holds_regardless_of_the_hypothesis() {
        let market = trinomial_with_digital(rat(1, 10));
        assert!(!check_theorem_hypothesis(&market).holds());
        for g in [
            Payoff { values: vec![int(1), int(0), int(0)] },
            Payoff { values: vec![int(0), int(1), int(3)] },
            Payoff { values: vec![int(-2), int(5), int(1)] },
        ] {
            let plan = semistatic_price(&market, &g).unwrap();
            let dual = dual_value(&market, &g, true);
            assert_eq!(plan.price, dual.value);
        }
    }

    #[test]
    fn no_options_hypothesis_is_vacuous() {
        assert_eq!(check_theorem_hypothesis(&trinomial()), HypothesisReport::Holds);
    }
}
