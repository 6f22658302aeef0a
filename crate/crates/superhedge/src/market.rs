//! Finite path-space markets: price trajectories, static options, payoffs,
//! and the level-set partitions that encode conditioning on price history.
//!
//! A market is a finite list of paths, each carrying a d x (T+1) matrix of
//! exact rational prices. Two paths belong to the same level set at time t
//! when their price histories up to t coincide entry by entry; the group
//! lists are ordered by price prefix so that every derived report is
//! independent of the input path order.

use crate::rational::{format_rational, parse_rational, ParseRationalError, Rational};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub id: String,
    /// One row per asset, one column per time 0..=T.
    pub prices: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticOption {
    pub id: String,
    /// Terminal payoff per path, aligned with `Market::paths`.
    pub payoff: Vec<Rational>,
    pub quoted_cost: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Market {
    pub assets: usize,
    pub steps: usize,
    pub paths: Vec<Path>,
    pub options: Vec<StaticOption>,
}

/// Terminal payoff per path, aligned with `Market::paths`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payoff {
    pub values: Vec<Rational>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum MarketError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("market needs at least one asset")]
    NoAssets,
    #[error("market needs at least one step")]
    NoSteps,
    #[error("market has no paths")]
    NoPaths,
    #[error("duplicate path id {0:?}")]
    DuplicatePathId(String),
    #[error("path {id:?}: expected {want} asset rows, found {got}")]
    PathRowCount { id: String, want: usize, got: usize },
    #[error("path {id:?}, asset {asset}: expected {want} prices, found {got}")]
    PathColumnCount { id: String, asset: usize, want: usize, got: usize },
    #[error("path {id:?}, asset {asset}, time {time}: {source}")]
    PathPrice { id: String, asset: usize, time: usize, source: ParseRationalError },
    #[error("duplicate option id {0:?}")]
    DuplicateOptionId(String),
    #[error("option {id:?}: payoff length {got} does not match path count {want}")]
    OptionLength { id: String, want: usize, got: usize },
    #[error("option {id:?}, payoff entry {index}: {source}")]
    OptionPayoff { id: String, index: usize, source: ParseRationalError },
    #[error("option {id:?}, cost: {source}")]
    OptionCost { id: String, source: ParseRationalError },
    #[error("payoff length {got} does not match path count {want}")]
    PayoffLength { want: usize, got: usize },
    #[error("payoff entry {index}: {source}")]
    PayoffValue { index: usize, source: ParseRationalError },
    #[error("payoff names unknown path id {0:?}")]
    PayoffUnknownPath(String),
    #[error("payoff missing path id {0:?}")]
    PayoffMissingPath(String),
}

impl Market {
    pub fn new(
        assets: usize,
        steps: usize,
        paths: Vec<Path>,
        options: Vec<StaticOption>,
    ) -> Result<Market, MarketError> {
        let market = Market { assets, steps, paths, options };
        market.validate()?;
        Ok(market)
    }

    fn validate(&self) -> Result<(), MarketError> {
        if self.assets == 0 {
            return Err(MarketError::NoAssets);
        }
        if self.steps == 0 {
            return Err(MarketError::NoSteps);
        }
        if self.paths.is_empty() {
            return Err(MarketError::NoPaths);
        }
        let mut seen = BTreeSet::new();
        for path in &self.paths {
            if !seen.insert(path.id.clone()) {
                return Err(MarketError::DuplicatePathId(path.id.clone()));
            }
            if path.prices.len() != self.assets {
                return Err(MarketError::PathRowCount {
                    id: path.id.clone(),
                    want: self.assets,
                    got: path.prices.len(),
                });
            }
            for (asset, row) in path.prices.iter().enumerate() {
                if row.len() != self.steps + 1 {
                    return Err(MarketError::PathColumnCount {
                        id: path.id.clone(),
                        asset,
                        want: self.steps + 1,
                        got: row.len(),
                    });
                }
            }
        }
        let mut seen_opts = BTreeSet::new();
        for option in &self.options {
            if !seen_opts.insert(option.id.clone()) {
                return Err(MarketError::DuplicateOptionId(option.id.clone()));
            }
            if option.payoff.len() != self.paths.len() {
                return Err(MarketError::OptionLength {
                    id: option.id.clone(),
                    want: self.paths.len(),
                    got: option.payoff.len(),
                });
            }
        }
        Ok(())
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    /// Price increment of `asset` over the step ending at `time` (1-based).
    pub fn increment(&self, path: usize, asset: usize, time: usize) -> Rational {
        debug_assert!(time >= 1 && time <= self.steps);
        &self.paths[path].prices[asset][time] - &self.paths[path].prices[asset][time - 1]
    }

    pub fn path_index(&self) -> BTreeMap<&str, usize> {
        self.paths.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect()
    }

    /// The same market with paths listed in the given order.
    pub fn reorder_paths(&self, order: &[usize]) -> Market {
        assert_eq!(order.len(), self.paths.len());
        let paths = order.iter().map(|&i| self.paths[i].clone()).collect();
        let options = self
            .options
            .iter()
            .map(|o| StaticOption {
                id: o.id.clone(),
                payoff: order.iter().map(|&i| o.payoff[i].clone()).collect(),
                quoted_cost: o.quoted_cost.clone(),
            })
            .collect();
        Market { assets: self.assets, steps: self.steps, paths, options }
    }

    /// The submarket holding only the given paths (option payoffs restricted
    /// alongside).
    pub fn restrict(&self, keep: &PathSet) -> Result<Market, MarketError> {
        let indices: Vec<usize> = keep.iter().collect();
        let paths = indices.iter().map(|&i| self.paths[i].clone()).collect();
        let options = self
            .options
            .iter()
            .map(|o| StaticOption {
                id: o.id.clone(),
                payoff: indices.iter().map(|&i| o.payoff[i].clone()).collect(),
                quoted_cost: o.quoted_cost.clone(),
            })
            .collect();
        Market::new(self.assets, self.steps, paths, options)
    }
}

/// A set of path indices into a fixed market, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathSet(BTreeSet<usize>);

impl PathSet {
    pub fn empty() -> Self {
        PathSet(BTreeSet::new())
    }

    pub fn all(n: usize) -> Self {
        PathSet((0..n).collect())
    }

    pub fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        PathSet(iter.into_iter().collect())
    }

    pub fn insert(&mut self, i: usize) {
        self.0.insert(i);
    }

    pub fn remove(&mut self, i: usize) -> bool {
        self.0.remove(&i)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn ids(&self, market: &Market) -> Vec<String> {
        self.iter().map(|i| market.paths[i].id.clone()).collect()
    }

    /// Indices present in the market but not in this set.
    pub fn complement(&self, n: usize) -> PathSet {
        PathSet((0..n).filter(|i| !self.0.contains(i)).collect())
    }
}

/// Partition of the paths by price history, one partition per time.
///
/// `groups[t]` lists the level sets at time t ordered by their price prefix;
/// `group_of[t][path]` locates a path's group. Groups at t+1 refine groups
/// at t.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSetIndex {
    pub groups: Vec<Vec<Vec<usize>>>,
    pub group_of: Vec<Vec<usize>>,
}

pub fn build_level_sets(market: &Market) -> LevelSetIndex {
    let n = market.num_paths();
    let mut groups = Vec::with_capacity(market.steps + 1);
    let mut group_of = Vec::with_capacity(market.steps + 1);
    for t in 0..=market.steps {
        let mut by_prefix: BTreeMap<Vec<Rational>, Vec<usize>> = BTreeMap::new();
        for (i, path) in market.paths.iter().enumerate() {
            let mut key = Vec::with_capacity(market.assets * (t + 1));
            for row in &path.prices {
                key.extend(row[..=t].iter().cloned());
            }
            by_prefix.entry(key).or_default().push(i);
        }
        let level: Vec<Vec<usize>> = by_prefix.into_values().collect();
        let mut locator = vec![usize::MAX; n];
        for (g, members) in level.iter().enumerate() {
            for &i in members {
                locator[i] = g;
            }
        }
        groups.push(level);
        group_of.push(locator);
    }
    LevelSetIndex { groups, group_of }
}

impl LevelSetIndex {
    pub fn num_times(&self) -> usize {
        self.groups.len()
    }

    /// Members of the group containing `path` at time `t`.
    pub fn group_members(&self, t: usize, path: usize) -> &[usize] {
        &self.groups[t][self.group_of[t][path]]
    }
}

/// Flat variable layout for a predictable trading strategy: one block of
/// `assets` holdings per step and per level-set group at the step's start,
/// restricted to groups that meet the active path set.
#[derive(Debug, Clone)]
pub struct StrategyIndex {
    pub assets: usize,
    /// (time t in 1..=steps, group index at t-1), in (t, group) order.
    pub blocks: Vec<(usize, usize)>,
    offsets: BTreeMap<(usize, usize), usize>,
}

impl StrategyIndex {
    pub fn build(market: &Market, index: &LevelSetIndex, active: &PathSet) -> StrategyIndex {
        let mut blocks = Vec::new();
        let mut offsets = BTreeMap::new();
        for t in 1..=market.steps {
            for (g, members) in index.groups[t - 1].iter().enumerate() {
                if members.iter().any(|i| active.contains(*i)) {
                    offsets.insert((t, g), blocks.len() * market.assets);
                    blocks.push((t, g));
                }
            }
        }
        StrategyIndex { assets: market.assets, blocks, offsets }
    }

    pub fn num_vars(&self) -> usize {
        self.blocks.len() * self.assets
    }

    /// First variable index of the holdings chosen at time `t-1` on `group`.
    pub fn offset(&self, t: usize, group: usize) -> Option<usize> {
        self.offsets.get(&(t, group)).copied()
    }

    /// Coefficients of the strategy variables in the terminal gain along
    /// `path`: the increment of each asset over each step, placed in the
    /// block of the group the path occupies when the holdings are chosen.
    pub fn gain_row(
        &self,
        market: &Market,
        index: &LevelSetIndex,
        path: usize,
    ) -> Vec<Rational> {
        let mut row = vec![Rational::zero(); self.num_vars()];
        for t in 1..=market.steps {
            let group = index.group_of[t - 1][path];
            if let Some(offset) = self.offset(t, group) {
                for asset in 0..self.assets {
                    row[offset + asset] = market.increment(path, asset, t);
                }
            }
        }
        row
    }
}

/// All paths whose price history up to time `t` matches some member of
/// `d_next`; the result is a union of full level sets and contains `d_next`.
pub fn project_support(index: &LevelSetIndex, d_next: &PathSet, t: usize) -> PathSet {
    let mut out = PathSet::empty();
    for members in &index.groups[t] {
        if members.iter().any(|i| d_next.contains(*i)) {
            for &i in members {
                out.insert(i);
            }
        }
    }
    out
}

// JSON wire formats: every number is a rational literal string

#[derive(Serialize, Deserialize)]
struct MarketJson {
    assets: usize,
    steps: usize,
    paths: Vec<PathJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    options: Vec<OptionJson>,
}

#[derive(Serialize, Deserialize)]
struct PathJson {
    id: String,
    prices: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct OptionJson {
    id: String,
    payoff: Vec<String>,
    cost: String,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PayoffJson {
    Values { values: Vec<String> },
    ByPath(BTreeMap<String, String>),
}

pub fn load_market(bytes: &[u8]) -> Result<Market, MarketError> {
    let raw: MarketJson =
        serde_json::from_slice(bytes).map_err(|e| MarketError::Json(e.to_string()))?;
    let mut paths = Vec::with_capacity(raw.paths.len());
    for p in &raw.paths {
        let mut prices = Vec::with_capacity(p.prices.len());
        for (asset, row) in p.prices.iter().enumerate() {
            let mut parsed = Vec::with_capacity(row.len());
            for (time, cell) in row.iter().enumerate() {
                let v = parse_rational(cell).map_err(|source| MarketError::PathPrice {
                    id: p.id.clone(),
                    asset,
                    time,
                    source,
                })?;
                parsed.push(v);
            }
            prices.push(parsed);
        }
        paths.push(Path { id: p.id.clone(), prices });
    }
    let mut options = Vec::with_capacity(raw.options.len());
    for o in &raw.options {
        let mut payoff = Vec::with_capacity(o.payoff.len());
        for (index, cell) in o.payoff.iter().enumerate() {
            let v = parse_rational(cell).map_err(|source| MarketError::OptionPayoff {
                id: o.id.clone(),
                index,
                source,
            })?;
            payoff.push(v);
        }
        let quoted_cost = parse_rational(&o.cost)
            .map_err(|source| MarketError::OptionCost { id: o.id.clone(), source })?;
        options.push(StaticOption { id: o.id.clone(), payoff, quoted_cost });
    }
    Market::new(raw.assets, raw.steps, paths, options)
}

pub fn save_market(market: &Market) -> Vec<u8> {
    let raw = MarketJson {
        assets: market.assets,
        steps: market.steps,
        paths: market
            .paths
            .iter()
            .map(|p| PathJson {
                id: p.id.clone(),
                prices: p
                    .prices
                    .iter()
                    .map(|row| row.iter().map(format_rational).collect())
                    .collect(),
            })
            .collect(),
        options: market
            .options
            .iter()
            .map(|o| OptionJson {
                id: o.id.clone(),
                payoff: o.payoff.iter().map(format_rational).collect(),
                cost: format_rational(&o.quoted_cost),
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&raw).expect("market serialization");
    bytes.push(b'\n');
    bytes
}

/// Loads a payoff from either `{"values": [..]}` aligned with the market's
/// path order or a `{path id: value}` map covering every path.
pub fn load_payoff(bytes: &[u8], market: &Market) -> Result<Payoff, MarketError> {
    let raw: PayoffJson =
        serde_json::from_slice(bytes).map_err(|e| MarketError::Json(e.to_string()))?;
    match raw {
        PayoffJson::Values { values } => {
            if values.len() != market.num_paths() {
                return Err(MarketError::PayoffLength {
                    want: market.num_paths(),
                    got: values.len(),
                });
            }
            let mut out = Vec::with_capacity(values.len());
            for (index, cell) in values.iter().enumerate() {
                out.push(
                    parse_rational(cell)
                        .map_err(|source| MarketError::PayoffValue { index, source })?,
                );
            }
            Ok(Payoff { values: out })
        }
        PayoffJson::ByPath(map) => {
            let index = market.path_index();
            for key in map.keys() {
                if !index.contains_key(key.as_str()) {
                    return Err(MarketError::PayoffUnknownPath(key.clone()));
                }
            }
            let mut out = vec![None; market.num_paths()];
            for (key, cell) in &map {
                let i = index[key.as_str()];
                let v = parse_rational(cell)
                    .map_err(|source| MarketError::PayoffValue { index: i, source })?;
                out[i] = Some(v);
            }
            let mut values = Vec::with_capacity(out.len());
            for (i, v) in out.into_iter().enumerate() {
                match v {
                    Some(v) => values.push(v),
                    None => {
                        return Err(MarketError::PayoffMissingPath(
                            market.paths[i].id.clone(),
                        ))
                    }
                }
            }
            Ok(Payoff { values })
        }
    }
}

pub fn save_payoff(payoff: &Payoff) -> Vec<u8> {
    #[derive(Serialize)]
    struct Raw<'a> {
        values: Vec<&'a str>,
    }
    let strings: Vec<String> = payoff.values.iter().map(format_rational).collect();
    let raw = Raw { values: strings.iter().map(|s| s.as_str()).collect() };
    let mut bytes = serde_json::to_vec_pretty(&raw).expect("payoff serialization");
    bytes.push(b'\n');
    bytes
}

/// Serializes any report as pretty JSON bytes with a trailing newline.
pub fn save_report<T: Serialize>(report: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serialization");
    bytes.push(b'\n');
    bytes
}
