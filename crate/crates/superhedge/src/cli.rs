//! Command-line front end: loads markets and payoffs, runs each analysis
//! and emits a report as json (default), csv rows or plain text. Exit codes:
//! 0 success, 1 failed self-check, 2 input or usage errors, 3 domain errors.

use crate::casebook;
use crate::dual::{dual_value, enumerate_vertices, MeasureVector};
use crate::market::{
    build_level_sets, load_market, load_payoff, save_market, save_payoff, Market, PathSet, Payoff,
};
use crate::polar::{
    classify, compute_omega_phi, compute_omega_star, ArbitrageClass, ArbitrageWitness,
};
use crate::primal::{check_replicable, superhedge, HedgePlan, PrimalError, Replication};
use crate::rational::{format_rational, rat, ExtendedRational, Rational};
use crate::semistatic::{check_theorem_hypothesis, semistatic_price};
use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "superhedge", version, about = "Exact superhedging prices, hedges and martingale measures on finite path markets", max_term_width = 100)]
struct Cli {
    /// Report rendering; generated inputs are always json
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    /// Paths charged by some martingale measure
    OmegaStar,
    /// Every path
    All,
    /// Paths charged by some option-consistent martingale measure
    OmegaPhi,
}

impl Target {
    fn as_str(&self) -> &'static str {
        match self {
            Target::OmegaStar => "omega-star",
            Target::All => "all",
            Target::OmegaPhi => "omega-phi",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Binomial,
    Trinomial,
    Random,
    #[value(name = "section4")]
    Section4,
    #[value(name = "section4-digital-open")]
    Section4DigitalOpen,
    #[value(name = "section4-digital-closed")]
    Section4DigitalClosed,
}

#[derive(Subcommand)]
enum Command {
    /// Report the support set of the martingale measures and the arbitrage class
    OmegaStar {
        #[arg(short, long)]
        market: PathBuf,
        /// Restrict to measures pricing the quoted options exactly
        #[arg(long, action = ArgAction::Set, default_value_t = false)]
        with_options: bool,
    },
    /// Classify the market: fully arbitrage-free, one-point arbitrage, or no measure at all
    Classify {
        #[arg(short, long)]
        market: PathBuf,
    },
    /// Least cash superhedging a claim on the chosen path set, dynamic trading only
    Price {
        #[arg(short, long)]
        market: PathBuf,
        #[arg(short = 'g', long)]
        payoff: PathBuf,
        #[arg(long, value_enum, default_value_t = Target::OmegaStar)]
        target: Target,
    },
    /// Full hedge plan: per-node values and holdings backing the price
    Hedge {
        #[arg(short, long)]
        market: PathBuf,
        #[arg(short = 'g', long)]
        payoff: PathBuf,
        #[arg(long, value_enum, default_value_t = Target::OmegaStar)]
        target: Target,
    },
    /// Best martingale-measure expectation of a claim, with an optimal measure
    Dual {
        #[arg(short, long)]
        market: PathBuf,
        #[arg(short = 'g', long)]
        payoff: PathBuf,
        /// Require measures to price the quoted options exactly
        #[arg(long, action = ArgAction::Set, default_value_t = false)]
        with_options: bool,
        /// Also enumerate up to this many vertices of the measure polytope
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Least cash with dynamic trading plus buy-and-hold option positions
    Semistatic {
        #[arg(short, long)]
        market: PathBuf,
        #[arg(short = 'g', long)]
        payoff: PathBuf,
    },
    /// Self-test: primal prices must equal dual values exactly; exits 1 on mismatch
    Check {
        #[arg(short, long)]
        market: PathBuf,
        /// Claim to test; omitted means a seeded random claim
        #[arg(short = 'g', long)]
        payoff: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decide whether a claim is replicable and report the cost or the gap
    Replicate {
        #[arg(short, long)]
        market: PathBuf,
        #[arg(short = 'g', long)]
        payoff: PathBuf,
    },
    /// Emit a generated market (or bundled claim) as json on standard output
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        assets: usize,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long, default_value_t = 2)]
        branching: usize,
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        arbitrage_free: bool,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn domain_error(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

/// Parses and runs one invocation, writing the report to `out`; diagnostics
/// go to standard error. Returns the process exit code.
pub fn run<I>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let format = cli.format;
    match dispatch(cli.command) {
        Ok(Outcome { report, code }) => {
            match report {
                Report::Structured(value) => emit(out, format, &value),
                Report::Raw(bytes) => {
                    let _ = out.write_all(&bytes);
                }
            }
            code
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

/// Entry point for the binary: argv without the program name.
pub fn run_to_stdout(args: impl Iterator<Item = String>) -> i32 {
    let full = std::iter::once("superhedge".to_string()).chain(args);
    let mut stdout = std::io::stdout();
    let code = run(full, &mut stdout);
    let _ = stdout.flush();
    code
}

enum Report {
    Structured(Value),
    Raw(Vec<u8>),
}

struct Outcome {
    report: Report,
    code: i32,
}

fn structured(value: Value) -> Result<Outcome, Failure> {
    Ok(Outcome { report: Report::Structured(value), code: 0 })
}

fn dispatch(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::OmegaStar { market, with_options } => {
            let market = read_market(&market)?;
            structured(omega_star_report(&market, with_options))
        }
        Command::Classify { market } => {
            let market = read_market(&market)?;
            let class = classify(&market);
            structured(json!({
                "class": class.tag.as_str(),
                "witness": class_witness_json(&class),
            }))
        }
        Command::Price { market, payoff, target } => {
            let market = read_market(&market)?;
            let g = read_payoff(&payoff, &market)?;
            structured(price_report(&market, &g, target)?)
        }
        Command::Hedge { market, payoff, target } => {
            let market = read_market(&market)?;
            let g = read_payoff(&payoff, &market)?;
            let set = target_set(&market, target);
            let plan = superhedge(&market, &g, &set).map_err(primal_failure)?;
            structured(hedge_plan_json(&market, &plan))
        }
        Command::Dual { market, payoff, with_options, cap } => {
            let market = read_market(&market)?;
            let g = read_payoff(&payoff, &market)?;
            let report = dual_value(&market, &g, with_options);
            let mut value = json!({
                "value": extended_string(&report.value),
                "measure": report.optimizer.as_ref().map(|m| measure_json(&market, m)),
                "options_constrained": report.constrained_by_options,
            });
            if let Some(cap) = cap {
                let vertices = enumerate_vertices(&market, with_options, cap);
                let listed: Vec<Value> =
                    vertices.vertices.iter().map(|m| measure_json(&market, m)).collect();
                value["vertices"] = Value::Array(listed);
                value["truncated"] = Value::Bool(vertices.truncated);
            }
            structured(value)
        }
        Command::Semistatic { market, payoff } => {
            let market = read_market(&market)?;
            let g = read_payoff(&payoff, &market)?;
            let plan = semistatic_price(&market, &g).map_err(|e| domain_error(e.to_string()))?;
            let dual = dual_value(&market, &g, true);
            let hypothesis = check_theorem_hypothesis(&market);
            structured(json!({
                "price": extended_string(&plan.price),
                "h": rational_strings(&plan.static_positions),
                "dynamic": hedge_plan_json(&market, &plan.dynamic_plan),
                "hedge_set": plan.hedge_set.ids(&market),
                "hypothesis": if hypothesis.holds() { "holds" } else { "fails" },
                "dual_value": extended_string(&dual.value),
                "matches_dual": plan.price == dual.value,
            }))
        }
        Command::Check { market, payoff, seed } => {
            let market = read_market(&market)?;
            let (g, source) = match payoff {
                Some(path) => (read_payoff(&path, &market)?, "file"),
                None => (casebook::gen_random_payoff(seed, &market), "generated"),
            };
            Ok(check_outcome(&market, &g, source))
        }
        Command::Replicate { market, payoff } => {
            let market = read_market(&market)?;
            let g = read_payoff(&payoff, &market)?;
            let report = match check_replicable(&market, &g).map_err(primal_failure)? {
                Replication::Replicable { cost, plan } => json!({
                    "replicable": true,
                    "cost": format_rational(&cost),
                    "gap": Value::Null,
                    "plan": hedge_plan_json(&market, &plan),
                }),
                Replication::NotReplicable { gap } => json!({
                    "replicable": false,
                    "cost": Value::Null,
                    "gap": format_rational(&gap),
                    "plan": Value::Null,
                }),
            };
            structured(report)
        }
        Command::Gen { kind, seed, assets, steps, branching, arbitrage_free } => {
            let bytes = generate(kind, seed, assets, steps, branching, arbitrage_free)?;
            Ok(Outcome { report: Report::Raw(bytes), code: 0 })
        }
    }
}

fn read_market(path: &PathBuf) -> Result<Market, Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    load_market(&bytes).map_err(|e| input_error(e.to_string()))
}

fn read_payoff(path: &PathBuf, market: &Market) -> Result<Payoff, Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    load_payoff(&bytes, market).map_err(|e| input_error(e.to_string()))
}

fn primal_failure(e: PrimalError) -> Failure {
    domain_error(e.to_string())
}

fn extended_string(v: &ExtendedRational) -> String {
    v.to_string()
}

fn rational_strings(values: &[Rational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

fn measure_json(market: &Market, measure: &MeasureVector) -> Value {
    let mut map = Map::new();
    for i in measure.support.iter() {
        map.insert(market.paths[i].id.clone(), format_rational(&measure.weights[i]).into());
    }
    Value::Object(map)
}

fn strategy_witness_json(witness: &ArbitrageWitness) -> Value {
    let mut dynamic: Map<String, Value> = Map::new();
    for ((t, group), holdings) in &witness.dynamic {
        let per_t = dynamic.entry(t.to_string()).or_insert_with(|| Value::Object(Map::new()));
        per_t[&group.to_string()] = rational_strings(holdings).into();
    }
    json!({
        "strategy": {
            "dynamic": dynamic,
            "static": rational_strings(&witness.static_positions),
        }
    })
}

fn class_witness_json(class: &ArbitrageClass) -> Value {
    match &class.witness {
        Some(witness) => strategy_witness_json(witness),
        None => Value::Null,
    }
}

fn omega_star_report(market: &Market, with_options: bool) -> Value {
    let effective = if with_options {
        market.clone()
    } else {
        Market { options: Vec::new(), ..market.clone() }
    };
    let support = if with_options {
        compute_omega_phi(&effective)
    } else {
        compute_omega_star(&effective)
    };
    let class = classify(&effective);
    let witness = match &class.witness {
        Some(strategy) => strategy_witness_json(strategy),
        None => match &support.uniform_witness {
            Some(measure) => json!({ "measure": measure_json(market, measure) }),
            None => Value::Null,
        },
    };
    json!({
        "omega_star": support.omega_star.ids(market),
        "polar": support.polar_set.ids(market),
        "class": class.tag.as_str(),
        "witness": witness,
        "options_constrained": support.options_constrained,
    })
}

fn target_set(market: &Market, target: Target) -> PathSet {
    match target {
        Target::All => PathSet::all(market.num_paths()),
        Target::OmegaStar => crate::polar::compute_omega_star_iterative(market).omega_star,
        Target::OmegaPhi => compute_omega_phi(market).omega_star,
    }
}

fn price_report(market: &Market, g: &Payoff, target: Target) -> Result<Value, Failure> {
    let index = build_level_sets(market);
    if index.groups[0].len() != 1 {
        return Err(primal_failure(PrimalError::MultipleRoots));
    }
    let set = target_set(market, target);
    let price = if set.is_empty() {
        ExtendedRational::NegInfinity
    } else {
        let plan = superhedge(market, g, &set).map_err(primal_failure)?;
        plan.unique_root_price().expect("single root checked above").clone()
    };
    Ok(json!({
        "price": extended_string(&price),
        "target": target.as_str(),
        "paths": set.ids(market),
    }))
}

fn hedge_plan_json(market: &Market, plan: &HedgePlan) -> Value {
    let mut values = Map::new();
    for (t, level) in plan.values.iter().enumerate() {
        let mut per_group = Map::new();
        for (group, value) in level.iter().enumerate() {
            per_group.insert(group.to_string(), extended_string(value).into());
        }
        values.insert(t.to_string(), Value::Object(per_group));
    }
    let mut strategy = Map::new();
    for (t, level) in plan.strategy.iter().enumerate().skip(1) {
        let mut per_group = Map::new();
        for (group, holdings) in level.iter().enumerate() {
            per_group.insert(group.to_string(), rational_strings(holdings).into());
        }
        strategy.insert(t.to_string(), Value::Object(per_group));
    }
    let mut roots = Map::new();
    for (group, value) in &plan.root_prices {
        roots.insert(group.to_string(), extended_string(value).into());
    }
    json!({
        "values": values,
        "strategy": strategy,
        "root_prices": roots,
        "target": plan.target_set.ids(market),
    })
}

fn check_outcome(market: &Market, g: &Payoff, source: &str) -> Outcome {
    let star = target_set(market, Target::OmegaStar);
    let primal = if star.is_empty() {
        ExtendedRational::NegInfinity
    } else {
        match superhedge(market, g, &star) {
            Ok(plan) => plan
                .root_prices
                .values()
                .max()
                .expect("at least one root")
                .clone(),
            Err(_) => ExtendedRational::NegInfinity,
        }
    };
    let bare = Market { options: Vec::new(), ..market.clone() };
    let dual = dual_value(&bare, g, false);
    let dynamic_match = primal == dual.value;
    let mut all_match = dynamic_match;
    let semistatic = if market.options.is_empty() {
        Value::Null
    } else {
        let semi_primal = match semistatic_price(market, g) {
            Ok(plan) => plan.price,
            Err(_) => ExtendedRational::NegInfinity,
        };
        let semi_dual = dual_value(market, g, true);
        let semi_match = semi_primal == semi_dual.value;
        all_match = all_match && semi_match;
        json!({
            "primal": extended_string(&semi_primal),
            "dual": extended_string(&semi_dual.value),
            "match": semi_match,
        })
    };
    let report = json!({
        "payoff_source": source,
        "dynamic": {
            "primal": extended_string(&primal),
            "dual": extended_string(&dual.value),
            "match": dynamic_match,
        },
        "semistatic": semistatic,
        "match": all_match,
    });
    Outcome { report: Report::Structured(report), code: if all_match { 0 } else { 1 } }
}

fn generate(
    kind: GenKind,
    seed: u64,
    assets: usize,
    steps: usize,
    branching: usize,
    arbitrage_free: bool,
) -> Result<Vec<u8>, Failure> {
    let as_input = |e: casebook::CasebookError| input_error(e.to_string());
    match kind {
        GenKind::Binomial => {
            let market = casebook::gen_binomial(&rat(2, 1), &rat(1, 2), &rat(1, 1), steps)
                .map_err(as_input)?;
            Ok(save_market(&market))
        }
        GenKind::Trinomial => {
            let factors = [rat(1, 2), rat(1, 1), rat(2, 1)];
            let market = casebook::gen_trinomial(&factors, &rat(1, 1), steps).map_err(as_input)?;
            Ok(save_market(&market))
        }
        GenKind::Random => {
            let market = casebook::gen_random_tree(seed, assets, steps, branching, arbitrage_free)
                .map_err(as_input)?;
            Ok(save_market(&market))
        }
        GenKind::Section4 => {
            let case = casebook::gen_section4(&casebook::Section4Config::reference())
                .map_err(as_input)?;
            Ok(save_market(&case.market))
        }
        GenKind::Section4DigitalOpen | GenKind::Section4DigitalClosed => {
            let case = casebook::gen_section4(&casebook::Section4Config::reference())
                .map_err(as_input)?;
            let name = if matches!(kind, GenKind::Section4DigitalOpen) {
                "digital-open"
            } else {
                "digital-closed"
            };
            Ok(save_payoff(&case.payoffs[name]))
        }
    }
}

fn emit(out: &mut dyn Write, format: Format, value: &Value) {
    match format {
        Format::Json => {
            let _ = serde_json::to_writer_pretty(&mut *out, value);
            let _ = out.write_all(b"\n");
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten(value, "", &mut rows);
            for (path, cell) in rows {
                let _ = writeln!(out, "{},{}", csv_quote(&path), csv_quote(&cell));
            }
        }
        Format::Text => {
            let mut rows = Vec::new();
            flatten(value, "", &mut rows);
            for (path, cell) in rows {
                let _ = writeln!(out, "{path}: {cell}");
            }
        }
    }
}

fn csv_quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

fn flatten(value: &Value, path: &str, rows: &mut Vec<(String, String)>) {
    let join = |key: &str| {
        if path.is_empty() {
            key.to_string()
        } else {
            format!("{path}.{key}")
        }
    };
    match value {
        Value::Object(map) => {
            for (key, sub) in map {
                flatten(sub, &join(key), rows);
            }
        }
        Value::Array(entries) => {
            for (i, sub) in entries.iter().enumerate() {
                flatten(sub, &join(&i.to_string()), rows);
            }
        }
        Value::Null => rows.push((path.to_string(), "null".to_string())),
        Value::Bool(b) => rows.push((path.to_string(), b.to_string())),
        Value::Number(n) => rows.push((path.to_string(), n.to_string())),
        Value::String(s) => rows.push((path.to_string(), s.clone())),
    }
}
