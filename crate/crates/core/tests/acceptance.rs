//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Time limits are pinned below.

mod common;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use tempfile::TempDir;

use common::gen::*;
use common::{materialize, rules_path, StubServer, ACTIVITY_RULES};
use semlint::builtins::UreqProbe;
use semlint::dsl::parse_rules;
use semlint::engine::evaluate_file;
use semlint::matcher::{match_node, Bindings, Value};
use semlint::orchestrator::{run_with, RunConfig, RunOutcome};
use semlint::report::Format;
use semlint::xml::{parse_xml, XmlNode};

const RULE_COUNT_LIMIT: Duration = Duration::from_secs(1);
const SEEDED_LIMIT: Duration = Duration::from_secs(5);
const ORACLE_LIMIT: Duration = Duration::from_secs(30);
const ORACLE_CASES: u32 = 1000;
const INVARIANT_CASES: u32 = 500;

const EXPECTED_TEXTS: [&str; 4] = [
    "does not appear in the list of project's members",
    "has not been published during this year",
    "has been published in cooperation with",
    "404",
];

type Outcome = Result<String, String>;

fn check(id: &str, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .unwrap_or_else(|_| Err("panicked".into()));
    let ms = start.elapsed().as_millis();
    match result {
        Ok(detail) => {
            println!("PASS [{id}] {name}: {detail} ({ms} ms)");
            true
        }
        Err(detail) => {
            println!("FAIL [{id}] {name}: {detail} ({ms} ms)");
            false
        }
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took < limit {
        Ok(())
    } else {
        Err(format!("took {took:?}, limit {limit:?}"))
    }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn seeded_config(dir: &Path, corpus: &Path, cache: &str) -> RunConfig {
    let mut cfg = RunConfig::new(
        vec![rules_path()],
        vec![corpus.display().to_string()],
        dir.join(cache),
    );
    cfg.format = Format::Machine;
    cfg.url_timeout_secs = 2.0;
    cfg
}

fn live_run(cfg: &RunConfig) -> RunOutcome {
    run_with(cfg, Arc::new(UreqProbe))
}

fn texts(out: &RunOutcome) -> Vec<String> {
    out.messages.iter().map(|m| m.text.clone()).collect()
}

// ---------------------------------------------------------------- criteria

fn rule_counts() -> Outcome {
    let start = Instant::now();
    let rules = parse_rules(ACTIVITY_RULES, "activity_report.rules").map_err(|e| e.to_string())?;
    within(RULE_COUNT_LIMIT, start)?;
    let (env, tests) = (rules.env_rule_count(), rules.test_rule_count());
    let got = format!("{} rules ({env} env, {tests} test)", rules.rules.len());
    if rules.rules.len() == 11 && env == 6 && tests == 5 {
        Ok(got)
    } else {
        Err(format!("{got}, expected 11 (6 env, 5 test)"))
    }
}

fn citation_example() -> Outcome {
    let doc = parse_xml(
        br#"<citation type="thesis" year="2003">
  <title>Semantic checking</title>
  <author>A. Author</author>
  <publisher>Somewhere</publisher>
  <year>2003</year>
</citation>"#,
        "citation.xml",
    )
    .map_err(|e| e.to_string())?;
    let rules = parse_rules(
        "<citation year=$Y><$T><$R> </citation> => c($Y);",
        "c.rules",
    )
    .map_err(|e| e.to_string())?;
    let b = match_node(&rules.rules[0].pattern, &doc, &Bindings::new()).ok_or("no match")?;
    match b.get("Y") {
        Some(Value::Str(y)) if y == "2003" => {}
        other => return Err(format!("Y = {other:?}")),
    }
    match b.get("T") {
        Some(Value::Node(XmlNode::Element(e))) if e.name == "title" => {}
        other => return Err(format!("T = {other:?}")),
    }
    let tail: Vec<String> = match b.get("R") {
        Some(Value::NodeList(ns)) => ns
            .iter()
            .map(|n| {
                n.as_element()
                    .map(|e| e.name.clone())
                    .unwrap_or_else(|| "#text".into())
            })
            .collect(),
        other => return Err(format!("R = {other:?}")),
    };
    if tail == ["author", "publisher", "year"] {
        Ok(format!("Y=\"2003\", T=<title>, R=[{}]", tail.join(", ")))
    } else {
        Err(format!("R = {tail:?}"))
    }
}

fn seeded_four_messages(stub: &StubServer) -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let corpus = tmp.path().join("seeded");
    materialize("seeded", &corpus, &stub.base());
    let start = Instant::now();
    let out = live_run(&seeded_config(tmp.path(), &corpus, "cache"));
    within(SEEDED_LIMIT, start)?;
    if !out.diagnostics.is_empty() {
        return Err(format!("diagnostics: {:?}", out.diagnostics));
    }
    let texts = texts(&out);
    let missing: Vec<&str> = EXPECTED_TEXTS
        .iter()
        .copied()
        .filter(|s| !texts.iter().any(|t| t.contains(s)))
        .collect();
    if texts.len() == 4 && missing.is_empty() {
        Ok("4 messages, one per defect".into())
    } else {
        let cooperation = texts
            .iter()
            .filter(|t| t.contains(EXPECTED_TEXTS[2]))
            .count();
        Err(format!(
            "{} messages ({cooperation} cooperation), missing {missing:?}",
            texts.len()
        ))
    }
}

/// The shared title is seen from both teams' files, so the activity rules
/// report it once per side.
fn seeded_one_per_defect_side(stub: &StubServer) -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let corpus = tmp.path().join("seeded");
    materialize("seeded", &corpus, &stub.base());
    let start = Instant::now();
    let out = live_run(&seeded_config(tmp.path(), &corpus, "cache"));
    within(SEEDED_LIMIT, start)?;
    let texts = texts(&out);
    let counts: Vec<usize> = EXPECTED_TEXTS
        .iter()
        .map(|s| texts.iter().filter(|t| t.contains(s)).count())
        .collect();
    if counts == [1, 1, 2, 1] && texts.len() == 5 && out.diagnostics.is_empty() {
        Ok("5 messages: 1 undeclared, 1 year, 2 cooperation (one per team), 1 dead URL".into())
    } else {
        Err(format!(
            "per-defect counts {counts:?}, total {}",
            texts.len()
        ))
    }
}

fn clean_corpus(stub: &StubServer) -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let corpus = tmp.path().join("clean");
    materialize("clean", &corpus, &stub.base());
    let start = Instant::now();
    let out = live_run(&seeded_config(tmp.path(), &corpus, "cache"));
    within(SEEDED_LIMIT, start)?;
    if out.messages.is_empty() && out.diagnostics.is_empty() {
        Ok("0 messages".into())
    } else {
        Err(format!("{:?} {:?}", texts(&out), out.diagnostics))
    }
}

fn env_scoping() -> Outcome {
    let xml = br#"<raweb year="2002">
<accueil><titre>T</titre><theme>S</theme><projet>alpha</projet></accueil>
<catperso>
<pers prenom="Ada" nom="Byron"><categorie>Scientist</categorie></pers>
</catperso>
<resultats>
<pers prenom="Ada" nom="Byron"><categorie>Scientist</categorie></pers>
</resultats>
</raweb>"#;
    let doc = parse_xml(xml, "scope.xml").map_err(|e| e.to_string())?;
    let rules = parse_rules(ACTIVITY_RULES, "a.rules").map_err(|e| e.to_string())?;
    let first = evaluate_file(&doc, &rules, "scope.xml");
    for _ in 0..100 {
        if evaluate_file(&doc, &rules, "scope.xml") != first {
            return Err("evaluation is not deterministic".into());
        }
    }
    let facts: Vec<String> = first
        .facts
        .iter()
        .map(|f| format!("{}@{}", f.term, f.origin.line))
        .collect();
    let tests: Vec<String> = first
        .tests
        .iter()
        .map(|t| format!("{}@{}", t.instantiated_goal(), t.pos.line))
        .collect();
    let want_facts = [r#"personne("Ada","Byron","alpha")@4"#];
    let want_tests = [r#"personne1("Ada","Byron","alpha")@7"#];
    if facts == want_facts && tests == want_tests {
        Ok("fact at line 4, delayed test at line 7".into())
    } else {
        Err(format!("facts {facts:?}, tests {tests:?}"))
    }
}

fn matcher_oracle() -> Outcome {
    let start = Instant::now();
    let mut runner = runner(ORACLE_CASES);
    let largest = std::sync::atomic::AtomicUsize::new(0);
    let strategy = (arb_tree(), arb_pattern(), any::<bool>());
    runner
        .run(&strategy, |(tree, p, as_list)| {
            largest.fetch_max(size(&tree), std::sync::atomic::Ordering::Relaxed);
            check_deep_contains(&tree, &p, as_list)
        })
        .map_err(|e| e.to_string())?;
    within(ORACLE_LIMIT, start)?;
    Ok(format!(
        "{ORACLE_CASES} cases, largest tree {} nodes",
        largest.into_inner()
    ))
}

fn determinism(stub: &StubServer) -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let corpus = tmp.path().join("seeded");
    materialize("seeded", &corpus, &stub.base());
    let cold_a = live_run(&seeded_config(tmp.path(), &corpus, "cold-a"));
    let cold_b = live_run(&seeded_config(tmp.path(), &corpus, "cold-b"));
    let warm = live_run(&seeded_config(tmp.path(), &corpus, "cold-a"));
    let mut par_cfg = seeded_config(tmp.path(), &corpus, "par");
    par_cfg.jobs = 8;
    let par = live_run(&par_cfg);
    if warm.stats.cached != warm.stats.inputs || warm.stats.inputs == 0 {
        return Err(format!(
            "warm run was not served from cache: {:?}",
            warm.stats
        ));
    }
    let reports = [&cold_a.report, &cold_b.report, &warm.report, &par.report];
    if reports.iter().all(|r| *r == &cold_a.report) {
        Ok(format!(
            "4 identical reports of {} bytes",
            cold_a.report.len()
        ))
    } else {
        Err("reports differ".into())
    }
}

fn incrementality(stub: &StubServer) -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let corpus = tmp.path().join("ten");
    let mut files = materialize("seeded", &corpus, &stub.base());
    for i in 0..8 {
        let p = corpus.join(format!("team{i}.xml"));
        fs::write(
            &p,
            format!(
                r#"<raweb year="2002">
<accueil><titre>T</titre><theme>S</theme><projet>team{i}</projet></accueil>
<catperso><pers prenom="P{i}" nom="Q"><categorie>C</categorie></pers></catperso>
<resultats><p><pers prenom="P{i}" nom="Q"/> <pers prenom="X{i}" nom="Y"/></p></resultats>
</raweb>
"#
            ),
        )
        .map_err(|e| e.to_string())?;
        files.push(p);
    }
    let cfg = seeded_config(tmp.path(), &corpus, "cache");
    let cold = live_run(&cfg);
    if cold.stats.inputs != 10 || cold.stats.evaluated != 10 {
        return Err(format!("cold run stats {:?}", cold.stats));
    }
    let touched = &files[5];
    let mut text = fs::read_to_string(touched).map_err(|e| e.to_string())?;
    text.push_str("<!-- touched -->\n");
    fs::write(touched, text).map_err(|e| e.to_string())?;
    let after = live_run(&cfg);
    if after.stats.evaluated != 1 || after.stats.cached != 9 {
        return Err(format!("after touch: {:?}", after.stats));
    }
    if after.report != cold.report {
        return Err("report changed".into());
    }
    Ok("1 evaluated, 9 from cache, report unchanged".into())
}

fn invariant_suite() -> Outcome {
    let mut done = Vec::new();
    let mut run = |name: &str, f: &mut dyn FnMut(&mut TestRunner) -> Result<(), String>| {
        let mut r = runner(INVARIANT_CASES);
        f(&mut r).map_err(|e| format!("{name}: {e}"))?;
        done.push(name.to_string());
        Ok::<(), String>(())
    };
    run("binding monotonicity (match)", &mut |r| {
        r.run(&(arb_tree(), arb_head(), arb_bindings()), |(t, p, b)| {
            check_match_monotone(&t, &p, &b)
        })
        .map_err(|e| e.to_string())
    })?;
    run("binding monotonicity (unify)", &mut |r| {
        r.run(&(arb_term(), arb_term(), arb_bindings()), |(x, y, b)| {
            check_unify_monotone(&x, &y, &b)
        })
        .map_err(|e| e.to_string())
    })?;
    run("attribute-order invariance", &mut |r| {
        r.run(&(arb_tree(), arb_head()), |(t, p)| check_attr_order(&t, &p))
            .map_err(|e| e.to_string())
    })?;
    run("tail-insertion invariance", &mut |r| {
        let s = (
            arb_tree(),
            prop::collection::vec(arb_pattern(), 0..4),
            any::<bool>(),
            prop::collection::vec(arb_tree(), 1..3),
        );
        r.run(&s, |(t, ps, v, extra)| check_open_tail(&t, &ps, v, extra))
            .map_err(|e| e.to_string())
    })?;
    run("unify success-symmetry", &mut |r| {
        r.run(&(arb_term(), arb_term(), arb_bindings()), |(x, y, b)| {
            check_unify_symmetric(&x, &y, &b)
        })
        .map_err(|e| e.to_string())
    })?;
    Ok(format!(
        "{} properties x {INVARIANT_CASES} cases",
        done.len()
    ))
}

fn main() -> ExitCode {
    let stub = StubServer::start();
    let results = [
        check("1", "activity rule file counts", rule_counts),
        check("2", "citation pattern worked example", citation_example),
        check("3", "seeded corpus yields exactly 4 messages", || {
            seeded_four_messages(&stub)
        }),
        check(
            "3b",
            "seeded corpus: every defect reported, per side",
            || seeded_one_per_defect_side(&stub),
        ),
        check("3c", "fixed corpus yields no messages", || {
            clean_corpus(&stub)
        }),
        check("4", "environment scoping (catperso)", env_scoping),
        check("5", "deep_contains vs brute-force oracle", matcher_oracle),
        check(
            "6",
            "determinism across cold, warm and parallel runs",
            || determinism(&stub),
        ),
        check("7", "incrementality after touching 1 of 10 files", || {
            incrementality(&stub)
        }),
        check("8", "unification and matching invariants", invariant_suite),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
