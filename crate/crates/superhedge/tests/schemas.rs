//! Every report the command line emits must validate against the shipped
//! schema files, across verbs, flags and degenerate markets.

use serde_json::Value;
use std::io::Write;
use std::path::PathBuf;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema(name: &str) -> Value {
    let bytes = std::fs::read(root().join("schemas").join(name)).unwrap();
    serde_json::from_slice(&bytes).unwrap()
}

fn run(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let full =
        std::iter::once("superhedge".to_string()).chain(args.iter().map(|s| s.to_string()));
    let code = superhedge::cli::run(full, &mut out);
    (code, out)
}

fn report_for(args: &[&str]) -> Value {
    let (code, out) = run(args);
    assert_eq!(code, 0, "args {args:?}");
    serde_json::from_slice(&out).unwrap_or_else(|e| panic!("args {args:?}: {e}"))
}

fn assert_valid(schema_name: &str, value: &Value, context: &str) {
    if let Err(e) = superhedge::schema::validate(&schema(schema_name), value) {
        panic!("{context}: {e}\n{value:#}");
    }
}

struct Files {
    _dir: tempfile::TempDir,
    binomial: String,
    call: String,
    rising: String,
    quoted: String,
    digital: String,
    grid: String,
    open: String,
}

fn files() -> Files {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(bytes).unwrap();
        path.to_string_lossy().into_owned()
    };
    let fixture = |name: &str| {
        root().join("fixtures").join(name).to_string_lossy().into_owned()
    };
    Files {
        binomial: fixture("binomial-market.json"),
        call: fixture("binomial-call.json"),
        grid: fixture("section4-market.json"),
        open: fixture("section4-digital-open.json"),
        rising: write(
            "rising.json",
            br#"{"assets":1,"steps":1,"paths":[
                {"id":"a","prices":[["1","2"]]},
                {"id":"b","prices":[["1","3"]]}]}"#,
        ),
        quoted: write(
            "quoted.json",
            br#"{"assets":1,"steps":1,"paths":[
                {"id":"half","prices":[["1","1/2"]]},
                {"id":"flat","prices":[["1","1"]]},
                {"id":"double","prices":[["1","2"]]}],
                "options":[{"id":"digital","payoff":["0","0","1"],"cost":"1/10"}]}"#,
        ),
        digital: write("digital.json", br#"{"values":["0","0","1"]}"#),
        _dir: dir,
    }
}

#[test]
fn support_and_classify_reports_validate() {
    let f = files();
    for market in [&f.binomial, &f.rising, &f.quoted, &f.grid] {
        for flag in ["false", "true"] {
            let report = report_for(&["omega-star", "-m", market, "--with-options", flag]);
            assert_valid("report-support.schema.json", &report, market);
        }
        let report = report_for(&["classify", "-m", market]);
        assert_valid("report-classify.schema.json", &report, market);
    }
}

#[test]
fn price_and_hedge_reports_validate() {
    let f = files();
    for target in ["omega-star", "all", "omega-phi"] {
        let report =
            report_for(&["price", "-m", &f.binomial, "-g", &f.call, "--target", target]);
        assert_valid("report-price.schema.json", &report, target);
        let report =
            report_for(&["hedge", "-m", &f.binomial, "-g", &f.call, "--target", target]);
        assert_valid("report-hedge.schema.json", &report, target);
    }
    // empty hedge set: price still reports, with -inf
    let empty = report_for(&["price", "-m", &f.rising, "-g", &f.call]);
    assert_valid("report-price.schema.json", &empty, "empty support");
    assert_eq!(empty["price"], "-inf");
}

#[test]
fn dual_reports_validate() {
    let f = files();
    let plain = report_for(&["dual", "-m", &f.binomial, "-g", &f.call]);
    assert_valid("report-dual.schema.json", &plain, "plain");
    let verbose = report_for(&[
        "dual", "-m", &f.quoted, "-g", &f.digital, "--with-options", "true", "--cap", "5",
    ]);
    assert_valid("report-dual.schema.json", &verbose, "with vertices");
    let infeasible = report_for(&["dual", "-m", &f.rising, "-g", &f.call]);
    assert_valid("report-dual.schema.json", &infeasible, "no measure");
    assert_eq!(infeasible["value"], "-inf");
    assert_eq!(infeasible["measure"], Value::Null);
}

#[test]
fn semistatic_replicate_and_check_reports_validate() {
    let f = files();
    let semi = report_for(&["semistatic", "-m", &f.grid, "-g", &f.open]);
    assert_valid("report-semistatic.schema.json", &semi, "grid market");
    let semi = report_for(&["semistatic", "-m", &f.quoted, "-g", &f.digital]);
    assert_valid("report-semistatic.schema.json", &semi, "quoted trinomial");

    let yes = report_for(&["replicate", "-m", &f.binomial, "-g", &f.call]);
    assert_valid("report-replicate.schema.json", &yes, "replicable");
    let trinomial = root().join("fixtures/trinomial-market.json");
    let no = report_for(&[
        "replicate", "-m", &trinomial.to_string_lossy(), "-g", &f.digital,
    ]);
    assert_valid("report-replicate.schema.json", &no, "gap");

    let checked = report_for(&["check", "-m", &f.binomial, "-g", &f.call]);
    assert_valid("report-check.schema.json", &checked, "file payoff");
    let seeded = report_for(&["check", "-m", &f.quoted, "--seed", "7"]);
    assert_valid("report-check.schema.json", &seeded, "seeded payoff");
}

#[test]
fn inputs_and_generated_files_validate() {
    let market_schema = schema("market.schema.json");
    let payoff_schema = schema("payoff.schema.json");
    for name in ["binomial-market.json", "trinomial-market.json", "section4-market.json"] {
        let value: Value =
            serde_json::from_slice(&std::fs::read(root().join("fixtures").join(name)).unwrap())
                .unwrap();
        superhedge::schema::validate(&market_schema, &value).unwrap();
    }
    for name in
        ["binomial-call.json", "section4-digital-open.json", "section4-digital-closed.json"]
    {
        let value: Value =
            serde_json::from_slice(&std::fs::read(root().join("fixtures").join(name)).unwrap())
                .unwrap();
        superhedge::schema::validate(&payoff_schema, &value).unwrap();
    }
    let (code, bytes) =
        run(&["gen", "--kind", "random", "--seed", "4", "--assets", "2", "--steps", "2"]);
    assert_eq!(code, 0);
    let value: Value = serde_json::from_slice(&bytes).unwrap();
    superhedge::schema::validate(&market_schema, &value).unwrap();

    // a per-path payoff map is the alternate accepted input form
    let by_path: Value = serde_json::from_str(r#"{"u": "1", "d": "0"}"#).unwrap();
    superhedge::schema::validate(&payoff_schema, &by_path).unwrap();
}
