//! Python bindings for the exact pricing library: markets, superhedging
//! prices, dual values, support sets and the instance generators. All
//! numbers cross the boundary as rational strings like "3/4" or "-inf".

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use superhedge::market::{self, PathSet, Payoff};
use superhedge::primal::Replication;
use superhedge::rational::{format_rational, parse_rational};
use superhedge::semistatic::HypothesisReport;
use superhedge::{casebook, dual, polar, primal, semistatic};

/// A finite scenario market: one price trajectory per path and asset,
/// plus optionally quoted options.
#[pyclass(name = "Market", frozen)]
struct PyMarket {
    inner: market::Market,
}

#[pymethods]
impl PyMarket {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        market::load_market(text.as_bytes()).map(|inner| PyMarket { inner }).map_err(value_error)
    }

    fn to_json(&self) -> String {
        String::from_utf8(market::save_market(&self.inner)).expect("serialized markets are utf-8")
    }

    #[getter]
    fn assets(&self) -> usize {
        self.inner.assets
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps
    }

    fn num_paths(&self) -> usize {
        self.inner.num_paths()
    }

    /// Path ids in declaration order, the order payoff lists follow.
    fn path_ids(&self) -> Vec<String> {
        self.inner.paths.iter().map(|p| p.id.clone()).collect()
    }

    fn option_ids(&self) -> Vec<String> {
        self.inner.options.iter().map(|o| o.id.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Market(assets={}, steps={}, paths={}, options={})",
            self.inner.assets,
            self.inner.steps,
            self.inner.num_paths(),
            self.inner.options.len()
        )
    }
}

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_payoff(market: &market::Market, values: &[String]) -> PyResult<Payoff> {
    if values.len() != market.num_paths() {
        return Err(PyValueError::new_err(format!(
            "payoff has {} values for {} paths",
            values.len(),
            market.num_paths()
        )));
    }
    let values =
        values.iter().map(|s| parse_rational(s)).collect::<Result<_, _>>().map_err(value_error)?;
    Ok(Payoff { values })
}

fn target_set(market: &market::Market, target: &str) -> PyResult<PathSet> {
    match target {
        "omega-star" => Ok(polar::compute_omega_star_iterative(market).omega_star),
        "omega-phi" => Ok(polar::compute_omega_phi(market).omega_star),
        "all" => Ok(PathSet::all(market.num_paths())),
        other => Err(PyValueError::new_err(format!(
            "unknown target {other:?}; expected omega-star, omega-phi or all"
        ))),
    }
}

/// Least cash whose admissible dynamic strategies dominate `payoff` on the
/// chosen target set ("omega-star", "omega-phi" or "all"). Returns "-inf"
/// when the target set is empty.
#[pyfunction]
#[pyo3(signature = (market, payoff, target = "omega-star"))]
fn price(market: &PyMarket, payoff: Vec<String>, target: &str) -> PyResult<String> {
    let m = &market.inner;
    let g = parse_payoff(m, &payoff)?;
    if market::build_level_sets(m).groups[0].len() > 1 {
        return Err(PyValueError::new_err(
            "price undefined for non-constant initial prices",
        ));
    }
    let set = target_set(m, target)?;
    if set.is_empty() {
        return Ok("-inf".to_string());
    }
    let plan = primal::superhedge(m, &g, &set).map_err(value_error)?;
    Ok(plan.root_prices.values().next().expect("single root").to_string())
}

/// Largest expectation of `payoff` under the finite-support martingale
/// measures, constrained to price every quoted option when `with_options`.
/// Returns the value and, if a maximizer exists, a dict mapping charged
/// path ids to weights.
#[pyfunction]
#[pyo3(signature = (market, payoff, with_options = false))]
fn dual_value(
    market: &PyMarket,
    payoff: Vec<String>,
    with_options: bool,
) -> PyResult<(String, Option<BTreeMap<String, String>>)> {
    let m = &market.inner;
    let g = parse_payoff(m, &payoff)?;
    let report = dual::dual_value(m, &g, with_options);
    let measure = report.optimizer.map(|mv| {
        mv.support
            .iter()
            .map(|i| (m.paths[i].id.clone(), format_rational(&mv.weights[i])))
            .collect()
    });
    Ok((report.value.to_string(), measure))
}

/// Ids of the paths charged by some martingale measure; with options the
/// measure must also reprice every quoted option.
#[pyfunction]
#[pyo3(signature = (market, with_options = false))]
fn omega_star(market: &PyMarket, with_options: bool) -> Vec<String> {
    let m = &market.inner;
    let set = if with_options {
        polar::compute_omega_phi(m).omega_star
    } else {
        polar::compute_omega_star_iterative(m).omega_star
    };
    set.iter().map(|i| m.paths[i].id.clone()).collect()
}

/// Arbitrage class of the market including its options:
/// "fully-arbitrage-free", "one-point-arbitrage" or "no-martingale-measure".
#[pyfunction]
fn classify(market: &PyMarket) -> String {
    polar::classify(&market.inner).tag.as_str().to_string()
}

/// Least cash for a semi-static superhedge (cash, option positions, dynamic
/// trading) dominating `payoff` on the option-consistent support. Returns
/// the price and the option positions; raises ValueError when no
/// option-consistent martingale measure exists.
#[pyfunction]
fn semistatic_price(market: &PyMarket, payoff: Vec<String>) -> PyResult<(String, Vec<String>)> {
    let m = &market.inner;
    let g = parse_payoff(m, &payoff)?;
    let plan = semistatic::semistatic_price(m, &g).map_err(value_error)?;
    let h = plan.static_positions.iter().map(format_rational).collect();
    Ok((plan.price.to_string(), h))
}

/// Whether the claim is perfectly replicable on the support set: returns
/// (True, cost) or (False, gap) where gap is the width of the price
/// interval.
#[pyfunction]
fn check_replicable(market: &PyMarket, payoff: Vec<String>) -> PyResult<(bool, String)> {
    let m = &market.inner;
    let g = parse_payoff(m, &payoff)?;
    match primal::check_replicable(m, &g).map_err(value_error)? {
        Replication::Replicable { cost, .. } => Ok((true, format_rational(&cost))),
        Replication::NotReplicable { gap } => Ok((false, format_rational(&gap))),
    }
}

/// Whether the claim can be superhedged at zero cost on the support set.
#[pyfunction]
fn in_cone(market: &PyMarket, payoff: Vec<String>) -> PyResult<bool> {
    let m = &market.inner;
    let g = parse_payoff(m, &payoff)?;
    dual::in_cone(m, &g).map_err(value_error)
}

/// Whether every consistent martingale measure supported inside the hedge
/// set already prices every quoted option exactly. Returns "holds" or
/// "fails <option-id> <direction> <value>".
#[pyfunction]
fn check_theorem_hypothesis(market: &PyMarket) -> String {
    match semistatic::check_theorem_hypothesis(&market.inner) {
        HypothesisReport::Holds => "holds".to_string(),
        HypothesisReport::Fails { option_id, direction, value } => {
            format!("fails {} {} {}", option_id, direction.as_str(), format_rational(&value))
        }
    }
}

/// Binomial tree over `steps` steps with factor strings `u` and `d`.
#[pyfunction]
fn gen_binomial(u: &str, d: &str, s0: &str, steps: usize) -> PyResult<PyMarket> {
    let u = parse_rational(u).map_err(value_error)?;
    let d = parse_rational(d).map_err(value_error)?;
    let s0 = parse_rational(s0).map_err(value_error)?;
    casebook::gen_binomial(&u, &d, &s0, steps).map(|inner| PyMarket { inner }).map_err(value_error)
}

/// Multinomial tree over increasing positive factor strings.
#[pyfunction]
fn gen_trinomial(factors: Vec<String>, s0: &str, steps: usize) -> PyResult<PyMarket> {
    let factors = factors
        .iter()
        .map(|s| parse_rational(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_error)?;
    let s0 = parse_rational(s0).map_err(value_error)?;
    casebook::gen_trinomial(&factors, &s0, steps)
        .map(|inner| PyMarket { inner })
        .map_err(value_error)
}

/// Seeded random scenario tree; with `arbitrage_free` the uniform measure
/// is a martingale measure charging every path.
#[pyfunction]
#[pyo3(signature = (seed, assets = 1, steps = 2, branching = 2, arbitrage_free = true))]
fn gen_random_tree(
    seed: u64,
    assets: usize,
    steps: usize,
    branching: usize,
    arbitrage_free: bool,
) -> PyResult<PyMarket> {
    casebook::gen_random_tree(seed, assets, steps, branching, arbitrage_free)
        .map(|inner| PyMarket { inner })
        .map_err(value_error)
}

/// The one-step wedge market on the reference grid, with its zero-cost
/// butterfly, quoted square call and the two digital claims keyed by name.
#[pyfunction]
fn gen_section4() -> PyResult<(PyMarket, BTreeMap<String, Vec<String>>)> {
    let case = casebook::gen_section4(&casebook::Section4Config::reference()).map_err(value_error)?;
    let payoffs = case
        .payoffs
        .iter()
        .map(|(name, g)| (name.clone(), g.values.iter().map(format_rational).collect()))
        .collect();
    Ok((PyMarket { inner: case.market }, payoffs))
}

#[pymodule]
fn superhedge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMarket>()?;
    m.add_function(wrap_pyfunction!(price, m)?)?;
    m.add_function(wrap_pyfunction!(dual_value, m)?)?;
    m.add_function(wrap_pyfunction!(omega_star, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(semistatic_price, m)?)?;
    m.add_function(wrap_pyfunction!(check_replicable, m)?)?;
    m.add_function(wrap_pyfunction!(in_cone, m)?)?;
    m.add_function(wrap_pyfunction!(check_theorem_hypothesis, m)?)?;
    m.add_function(wrap_pyfunction!(gen_binomial, m)?)?;
    m.add_function(wrap_pyfunction!(gen_trinomial, m)?)?;
    m.add_function(wrap_pyfunction!(gen_random_tree, m)?)?;
    m.add_function(wrap_pyfunction!(gen_section4, m)?)?;
    Ok(())
}
