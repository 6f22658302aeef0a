//! Instance generators: binomial and trinomial trees, seeded random
//! scenario trees, and a one-period grid market with two quoted options
//! whose key prices are known in closed form.

use crate::market::{Market, Path, Payoff, StaticOption};
use crate::rational::{format_rational, int, ExtendedRational, Rational};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone, thiserror::Error)]
pub enum CasebookError {
    #[error("missing witness point: {0}")]
    MissingWitness(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// One-period market on a price grid with a butterfly quoted at zero and a
/// call on the squared price quoted at `c1`. The grid must carry the points
/// that make the two digitals behave as recorded in the golden values.
#[derive(Debug, Clone)]
pub struct Section4Config {
    pub s0: Rational,
    pub k0: Rational,
    pub k1: Rational,
    pub c1: Rational,
    pub grid: Vec<Rational>,
}

impl Section4Config {
    pub fn reference() -> Section4Config {
        Section4Config {
            s0: Rational::new(3.into(), 2.into()),
            k0: int(2),
            k1: int(25),
            c1: Rational::new(1.into(), 10.into()),
            grid: [
                "0", "1", "2", "5/2", "3", "7/2", "4", "9/2", "24/5", "6",
            ]
            .iter()
            .map(|s| crate::rational::parse_rational(s).unwrap())
            .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), CasebookError> {
        let bad = |msg: String| Err(CasebookError::InvalidParameter(msg));
        if !self.s0.is_positive() {
            return bad("s0 must be positive".into());
        }
        if self.k0 <= self.s0 {
            return bad("K0 must exceed s0".into());
        }
        let k0_plus_2 = &self.k0 + int(2);
        if self.k1 <= &k0_plus_2 * &k0_plus_2 {
            return bad("K1 must exceed (K0+2)^2".into());
        }
        if !self.c1.is_positive() {
            return bad("c1 must be positive".into());
        }
        if self.grid.is_empty() || self.grid[0].is_negative() {
            return bad("grid must be sorted, distinct and nonnegative".into());
        }
        for pair in self.grid.windows(2) {
            if pair[0] >= pair[1] {
                return bad("grid must be sorted, distinct and nonnegative".into());
            }
        }
        let missing = |msg: String| Err(CasebookError::MissingWitness(msg));
        let has = |p: &Rational| self.grid.contains(p);
        if !has(&Rational::zero()) {
            return missing("grid point 0".into());
        }
        if !has(&self.k0) {
            return missing(format!("grid point {} (K0)", format_rational(&self.k0)));
        }
        let k0_plus_1 = &self.k0 + int(1);
        if !has(&k0_plus_1) {
            return missing(format!("grid point {} (K0+1)", format_rational(&k0_plus_1)));
        }
        if !has(&k0_plus_2) {
            return missing(format!("grid point {} (K0+2)", format_rational(&k0_plus_2)));
        }
        if !self.grid.iter().any(|w| *w > self.k0 && *w < k0_plus_2) {
            return missing(format!(
                "a grid point strictly between {} and {}",
                format_rational(&self.k0),
                format_rational(&k0_plus_2)
            ));
        }
        if !self.grid.iter().any(|w| *w >= k0_plus_2 && w * w < self.k1) {
            return missing(format!(
                "a grid point w with w >= {} and w^2 < {}",
                format_rational(&k0_plus_2),
                format_rational(&self.k1)
            ));
        }
        let k1_plus_c1 = &self.k1 + &self.c1;
        if !self.grid.iter().any(|w| w * w > k1_plus_c1) {
            return missing(format!(
                "a grid point w with w^2 > {}",
                format_rational(&k1_plus_c1)
            ));
        }
        Ok(())
    }
}

/// A value the generated instance is expected to produce, with a note on
/// where the number comes from.
#[derive(Debug, Clone)]
pub struct ExpectedValue {
    pub name: String,
    pub value: ExtendedRational,
    pub source: String,
}

#[derive(Debug, Clone)]
pub struct GoldenCase {
    pub market: Market,
    pub payoffs: BTreeMap<String, Payoff>,
    pub expected: Vec<ExpectedValue>,
    /// Ids of the grid points strictly inside (K0, K0+2), the paths no
    /// option-consistent martingale measure charges.
    pub omega_phi_excluded_ids: Vec<String>,
}

impl GoldenCase {
    /// The recorded value under `name`; panics when absent.
    pub fn golden(&self, name: &str) -> &ExtendedRational {
        &self
            .expected
            .iter()
            .find(|e| e.name == name)
            .unwrap_or_else(|| panic!("no golden value named {name:?}"))
            .value
    }
}

fn positive_part(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

pub fn gen_section4(cfg: &Section4Config) -> Result<GoldenCase, CasebookError> {
    cfg.validate()?;
    let k0_plus_1 = &cfg.k0 + int(1);
    let k0_plus_2 = &cfg.k0 + int(2);
    let paths: Vec<Path> = cfg
        .grid
        .iter()
        .map(|w| Path { id: format_rational(w), prices: vec![vec![cfg.s0.clone(), w.clone()]] })
        .collect();
    let butterfly: Vec<Rational> = cfg
        .grid
        .iter()
        .map(|w| {
            positive_part(w - &cfg.k0) - int(2) * positive_part(w - &k0_plus_1)
                + positive_part(w - &k0_plus_2)
        })
        .collect();
    let square_call: Vec<Rational> =
        cfg.grid.iter().map(|w| positive_part(w * w - &cfg.k1)).collect();
    let options = vec![
        StaticOption { id: "butterfly".into(), payoff: butterfly, quoted_cost: Rational::zero() },
        StaticOption { id: "square-call".into(), payoff: square_call, quoted_cost: cfg.c1.clone() },
    ];
    let market = Market::new(1, 1, paths, options)
        .map_err(|e| CasebookError::InvalidParameter(e.to_string()))?;

    let open = |w: &Rational| *w > cfg.k0 && *w < k0_plus_2;
    let indicator = |hit: bool| if hit { Rational::one() } else { Rational::zero() };
    let digital_open =
        Payoff { values: cfg.grid.iter().map(|w| indicator(open(w))).collect() };
    let digital_closed = Payoff {
        values: cfg.grid.iter().map(|w| indicator(*w >= cfg.k0 && *w <= k0_plus_2)).collect(),
    };
    let mut payoffs = BTreeMap::new();
    payoffs.insert("digital-open".to_string(), digital_open);
    payoffs.insert("digital-closed".to_string(), digital_closed);

    let ratio = &cfg.s0 / &cfg.k0;
    let open_everywhere = if ratio < Rational::one() { ratio.clone() } else { Rational::one() };
    let fin = |v: Rational| ExtendedRational::Finite(v);
    let expected = vec![
        ExpectedValue {
            name: "semistatic-price-digital-open".into(),
            value: fin(Rational::zero()),
            source: "closed-form".into(),
        },
        ExpectedValue {
            name: "price-digital-open-everywhere".into(),
            value: fin(open_everywhere),
            source: "closed-form".into(),
        },
        ExpectedValue {
            name: "dynamic-price-digital-closed-everywhere".into(),
            value: fin(ratio),
            source: "hand-derived".into(),
        },
        ExpectedValue {
            name: "measure-optimum-digital-open".into(),
            value: fin(Rational::zero()),
            source: "closed-form".into(),
        },
    ];
    let omega_phi_excluded_ids =
        cfg.grid.iter().filter(|w| open(w)).map(format_rational).collect();
    Ok(GoldenCase { market, payoffs, expected, omega_phi_excluded_ids })
}

/// Recombining factors are not collapsed: each of the 2^T letter words is
/// its own path, so level sets stay history-based.
pub fn gen_binomial(
    u: &Rational,
    d: &Rational,
    s0: &Rational,
    steps: usize,
) -> Result<Market, CasebookError> {
    if !(u > d && d.is_positive()) {
        return Err(CasebookError::InvalidParameter("factors must satisfy u > d > 0".into()));
    }
    if !s0.is_positive() {
        return Err(CasebookError::InvalidParameter("s0 must be positive".into()));
    }
    if steps == 0 {
        return Err(CasebookError::InvalidParameter("steps must be positive".into()));
    }
    let mut paths = Vec::with_capacity(1 << steps);
    for word in 0..1u64 << steps {
        let mut id = String::new();
        let mut prices = vec![s0.clone()];
        for t in 0..steps {
            let down = word >> (steps - 1 - t) & 1 == 1;
            id.push(if down { 'd' } else { 'u' });
            let factor = if down { d } else { u };
            prices.push(prices[t].clone() * factor);
        }
        paths.push(Path { id, prices: vec![prices] });
    }
    Market::new(1, steps, paths, Vec::new())
        .map_err(|e| CasebookError::InvalidParameter(e.to_string()))
}

/// One path per word over the factors, id = the word's digit string.
pub fn gen_trinomial(
    factors: &[Rational],
    s0: &Rational,
    steps: usize,
) -> Result<Market, CasebookError> {
    if factors.len() < 2 || factors.len() > 10 {
        return Err(CasebookError::InvalidParameter("between 2 and 10 factors".into()));
    }
    for pair in factors.windows(2) {
        if pair[0] >= pair[1] {
            return Err(CasebookError::InvalidParameter("factors must be increasing".into()));
        }
    }
    if !factors[0].is_positive() {
        return Err(CasebookError::InvalidParameter("factors must be positive".into()));
    }
    if !s0.is_positive() {
        return Err(CasebookError::InvalidParameter("s0 must be positive".into()));
    }
    if steps == 0 {
        return Err(CasebookError::InvalidParameter("steps must be positive".into()));
    }
    let b = factors.len() as u64;
    let count = b.pow(steps as u32);
    let mut paths = Vec::with_capacity(count as usize);
    for word in 0..count {
        let mut id = String::new();
        let mut prices = vec![s0.clone()];
        for t in 0..steps {
            let digit = (word / b.pow((steps - 1 - t) as u32) % b) as usize;
            id.push(char::from_digit(digit as u32, 10).unwrap());
            prices.push(prices[t].clone() * &factors[digit]);
        }
        paths.push(Path { id, prices: vec![prices] });
    }
    Market::new(1, steps, paths, Vec::new())
        .map_err(|e| CasebookError::InvalidParameter(e.to_string()))
}

fn random_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    Rational::new(rng.random_range(lo..=hi).into(), rng.random_range(1i64..=9).into())
}

/// Seeded scenario tree: `branching` children per node, price increments
/// with numerators in [-20, 20] and denominators in [1, 9]. With
/// `arbitrage_free`, each node's last child offsets the others so the child
/// increments sum to zero per asset; the uniform measure is then a
/// martingale measure charging every path.
pub fn gen_random_tree(
    seed: u64,
    assets: usize,
    steps: usize,
    branching: usize,
    arbitrage_free: bool,
) -> Result<Market, CasebookError> {
    if assets == 0 {
        return Err(CasebookError::InvalidParameter("assets must be positive".into()));
    }
    if steps == 0 {
        return Err(CasebookError::InvalidParameter("steps must be positive".into()));
    }
    if branching < 2 {
        return Err(CasebookError::InvalidParameter("branching must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<Vec<Rational>> =
        (0..assets).map(|_| vec![random_rational(&mut rng, 1, 20)]).collect();
    let mut histories = vec![start];
    for _ in 0..steps {
        let mut next = Vec::with_capacity(histories.len() * branching);
        for history in &histories {
            let mut increments: Vec<Vec<Rational>> = (0..branching)
                .map(|_| (0..assets).map(|_| random_rational(&mut rng, -20, 20)).collect())
                .collect();
            if arbitrage_free {
                for a in 0..assets {
                    let mut sum = Rational::zero();
                    for child in &increments[..branching - 1] {
                        sum = sum + &child[a];
                    }
                    increments[branching - 1][a] = -sum;
                }
            }
            for child in increments {
                let mut extended = history.clone();
                for a in 0..assets {
                    let last = extended[a].last().unwrap().clone();
                    extended[a].push(last + &child[a]);
                }
                next.push(extended);
            }
        }
        histories = next;
    }
    let paths = histories
        .into_iter()
        .enumerate()
        .map(|(i, prices)| Path { id: format!("p{i}"), prices })
        .collect();
    Market::new(assets, steps, paths, Vec::new())
        .map_err(|e| CasebookError::InvalidParameter(e.to_string()))
}

/// Seeded claim with entries shaped like the tree increments.
pub fn gen_random_payoff(seed: u64, market: &Market) -> Payoff {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Payoff {
        values: (0..market.num_paths()).map(|_| random_rational(&mut rng, -20, 20)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::dual_value;
    use crate::market::{load_market, save_market, PathSet};
    use crate::polar::compute_omega_star;
    use crate::polar::compute_omega_phi;
    use crate::primal::superhedge;
    use crate::rational::rat;
    use crate::semistatic::semistatic_price;

    fn fin(v: Rational) -> ExtendedRational {
        ExtendedRational::Finite(v)
    }

    #[test]
    fn reference_grid_market_is_exact() {
        let case = gen_section4(&Section4Config::reference()).unwrap();
        let market = &case.market;
        assert_eq!((market.assets, market.steps, market.num_paths()), (1, 1, 10));
        assert_eq!(market.paths[3].id, "5/2");
        assert_eq!(market.paths[3].prices[0], vec![rat(3, 2), rat(5, 2)]);
        let butterfly = &market.options[0];
        assert_eq!(butterfly.quoted_cost, int(0));
        let by_id = market.path_index();
        assert_eq!(butterfly.payoff[by_id["2"]], int(0));
        assert_eq!(butterfly.payoff[by_id["5/2"]], rat(1, 2));
        assert_eq!(butterfly.payoff[by_id["3"]], int(1));
        assert_eq!(butterfly.payoff[by_id["7/2"]], rat(1, 2));
        assert_eq!(butterfly.payoff[by_id["4"]], int(0));
        let square_call = &market.options[1];
        assert_eq!(square_call.quoted_cost, rat(1, 10));
        assert_eq!(square_call.payoff[by_id["9/2"]], int(0));
        assert_eq!(square_call.payoff[by_id["24/5"]], int(0));
        assert_eq!(square_call.payoff[by_id["6"]], int(11));
        let open = &case.payoffs["digital-open"];
        let hits: Vec<usize> =
            (0..10).filter(|&i| open.values[i] == int(1)).collect();
        assert_eq!(hits, vec![3, 4, 5]);
        let closed = &case.payoffs["digital-closed"];
        let hits: Vec<usize> =
            (0..10).filter(|&i| closed.values[i] == int(1)).collect();
        assert_eq!(hits, vec![2, 3, 4, 5, 6]);
    }

    #[test]
    fn butterfly_peaks_at_one_above_the_middle_strike() {
        let case = gen_section4(&Section4Config::reference()).unwrap();
        let butterfly = &case.market.options[0];
        let peak = butterfly.payoff.iter().max().unwrap();
        assert_eq!(peak, &int(1));
        let at_middle = &butterfly.payoff[case.market.path_index()["3"]];
        assert_eq!(at_middle, &int(1));
    }

    #[test]
    fn excluded_ids_match_the_support_computation() {
        let case = gen_section4(&Section4Config::reference()).unwrap();
        assert_eq!(case.omega_phi_excluded_ids, vec!["5/2", "3", "7/2"]);
        let support = compute_omega_phi(&case.market);
        let excluded: Vec<String> = support.polar_set.ids(&case.market);
        assert_eq!(excluded, case.omega_phi_excluded_ids);
    }

    #[test]
    fn golden_semistatic_and_measure_values_are_met() {
        let case = gen_section4(&Section4Config::reference()).unwrap();
        let g1 = &case.payoffs["digital-open"];
        let plan = semistatic_price(&case.market, g1).unwrap();
        assert_eq!(&plan.price, case.golden("semistatic-price-digital-open"));
        let dual = dual_value(&case.market, g1, true);
        assert_eq!(&dual.value, case.golden("measure-optimum-digital-open"));
        assert_eq!(dual.value, fin(int(0)));
    }

    #[test]
    fn golden_closed_digital_priced_everywhere() {
        let case = gen_section4(&Section4Config::reference()).unwrap();
        let g2 = &case.payoffs["digital-closed"];
        let everywhere = PathSet::all(case.market.num_paths());
        let plan = superhedge(&case.market, g2, &everywhere).unwrap();
        let root = plan.root_prices.values().next().unwrap();
        assert_eq!(root, case.golden("dynamic-price-digital-closed-everywhere"));
        assert_eq!(root, &fin(rat(3, 4)));
    }

    #[test]
    fn open_digital_everywhere_tracks_the_leftmost_interior_point() {
        // the dynamic cost is s0 over the smallest charged interior point,
        // here (3/2)/(5/2), strictly below the recorded 3/4 target
        let case = gen_section4(&Section4Config::reference()).unwrap();
        let g1 = &case.payoffs["digital-open"];
        let everywhere = PathSet::all(case.market.num_paths());
        let plan = superhedge(&case.market, g1, &everywhere).unwrap();
        let root = plan.root_prices.values().next().unwrap();
        assert_eq!(root, &fin(rat(3, 5)));
        assert!(root < case.golden("price-digital-open-everywhere"));
        assert_eq!(case.golden("price-digital-open-everywhere"), &fin(rat(3, 4)));
    }

    #[test]
    fn config_violations_name_the_missing_piece() {
        let mut cfg = Section4Config::reference();
        cfg.grid.retain(|w| w != &int(2));
        match gen_section4(&cfg) {
            Err(CasebookError::MissingWitness(msg)) => assert_eq!(msg, "grid point 2 (K0)"),
            other => panic!("expected a missing witness, got {other:?}"),
        }

        let mut cfg = Section4Config::reference();
        cfg.k1 = int(16);
        assert!(matches!(gen_section4(&cfg), Err(CasebookError::InvalidParameter(_))));

        let mut cfg = Section4Config::reference();
        cfg.c1 = int(0);
        assert!(matches!(gen_section4(&cfg), Err(CasebookError::InvalidParameter(_))));

        let mut cfg = Section4Config::reference();
        cfg.grid.swap(0, 1);
        assert!(matches!(gen_section4(&cfg), Err(CasebookError::InvalidParameter(_))));

        let mut cfg = Section4Config::reference();
        cfg.grid.retain(|w| w != &int(6));
        match gen_section4(&cfg) {
            Err(CasebookError::MissingWitness(msg)) => {
                assert_eq!(msg, "a grid point w with w^2 > 251/10")
            }
            other => panic!("expected a missing witness, got {other:?}"),
        }
    }

    #[test]
    fn binomial_tree_layout() {
        let market = gen_binomial(&int(2), &rat(1, 2), &int(1), 1).unwrap();
        assert_eq!(market.num_paths(), 2);
        assert_eq!(market.paths[0].id, "u");
        assert_eq!(market.paths[0].prices[0], vec![int(1), int(2)]);
        assert_eq!(market.paths[1].id, "d");
        assert_eq!(market.paths[1].prices[0], vec![int(1), rat(1, 2)]);
        assert_eq!(compute_omega_star(&market).omega_star.len(), 2);

        let two = gen_binomial(&int(2), &rat(1, 2), &int(1), 2).unwrap();
        let ids: Vec<&str> = two.paths.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, vec!["uu", "ud", "du", "dd"]);
        assert_eq!(two.paths[1].prices[0], vec![int(1), int(2), int(1)]);
        assert_eq!(two.paths[2].prices[0], vec![int(1), rat(1, 2), int(1)]);

        assert!(gen_binomial(&rat(1, 2), &int(2), &int(1), 1).is_err());
        assert!(gen_binomial(&int(2), &rat(1, 2), &int(1), 0).is_err());
    }

    #[test]
    fn trinomial_tree_layout() {
        let market = gen_trinomial(&[rat(1, 2), int(1), int(2)], &int(1), 1).unwrap();
        assert_eq!(market.num_paths(), 3);
        let ids: Vec<&str> = market.paths.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, vec!["0", "1", "2"]);
        assert_eq!(market.paths[0].prices[0], vec![int(1), rat(1, 2)]);
        assert_eq!(market.paths[2].prices[0], vec![int(1), int(2)]);

        assert!(gen_trinomial(&[int(2), rat(1, 2)], &int(1), 1).is_err());
        assert!(gen_trinomial(&[int(1)], &int(1), 1).is_err());
    }

    #[test]
    fn random_trees_are_deterministic_in_the_seed() {
        let a = gen_random_tree(7, 2, 2, 2, true).unwrap();
        let b = gen_random_tree(7, 2, 2, 2, true).unwrap();
        assert_eq!(save_market(&a), save_market(&b));
        let c = gen_random_tree(8, 2, 2, 2, true).unwrap();
        assert_ne!(save_market(&a), save_market(&c));
    }

    #[test]
    fn arbitrage_free_trees_charge_every_path() {
        for seed in 0..6 {
            let market = gen_random_tree(seed, 2, 2, 2, true).unwrap();
            let support = compute_omega_star(&market).omega_star;
            assert_eq!(support.len(), market.num_paths(), "seed {seed}");
        }
    }

    #[test]
    fn generated_markets_round_trip_through_json() {
        let cases = vec![
            gen_section4(&Section4Config::reference()).unwrap().market,
            gen_binomial(&int(2), &rat(1, 2), &int(1), 2).unwrap(),
            gen_trinomial(&[rat(1, 2), int(1), int(2)], &int(1), 2).unwrap(),
            gen_random_tree(3, 2, 2, 3, false).unwrap(),
        ];
        for market in cases {
            let reloaded = load_market(&save_market(&market)).unwrap();
            assert_eq!(reloaded, market);
        }
    }

    #[test]
    fn random_payoffs_are_deterministic_and_aligned() {
        let market = gen_random_tree(5, 1, 2, 3, true).unwrap();
        let a = gen_random_payoff(11, &market);
        let b = gen_random_payoff(11, &market);
        assert_eq!(a, b);
        assert_eq!(a.values.len(), market.num_paths());
        assert_ne!(a, gen_random_payoff(12, &market));
    }

    #[test]
    fn tree_parameter_violations_are_rejected() {
        assert!(gen_random_tree(0, 0, 1, 2, true).is_err());
        assert!(gen_random_tree(0, 1, 0, 2, true).is_err());
        assert!(gen_random_tree(0, 1, 1, 1, true).is_err());
    }
}
