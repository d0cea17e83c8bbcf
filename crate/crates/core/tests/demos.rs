//! The demo programs driven end to end: scenario files, reports, and the
//! search for runs outside a program's guarantee.

use std::path::PathBuf;

use seclink::demos::{
    default_worlds, find_violation, http, run, worlds, ContextRef, DemoError, Mode, Program, RunConfig, Scenario,
    ScenarioError, Via, WebPolicy, PROGRAM_NAMES,
};
use seclink::effect::Mechanism;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn shipped(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenario_dir().join(format!("{name}.json"))).unwrap();
    Scenario::from_json(&text).unwrap()
}

/// Set `SECLINK_BLESS=1` to rewrite the files from the built-in scenarios.
#[test]
fn shipped_scenarios_are_current() {
    for (name, s) in worlds::example_scenarios() {
        let path = scenario_dir().join(format!("{name}.json"));
        if std::env::var_os("SECLINK_BLESS").is_some() {
            std::fs::create_dir_all(scenario_dir()).unwrap();
            std::fs::write(&path, s.to_json() + "\n").unwrap();
        }
        assert_eq!(shipped(name), s, "{}", path.display());
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }
}

fn run_scenario(program: &str, ctx: &str, s: &Scenario, via: Via) -> seclink::demos::Report {
    let p = Program::from_name(program, s.policy.as_deref()).unwrap();
    let cfg = RunConfig {
        mode: p.mode(),
        via,
        max_iterations: s.max_iterations,
    };
    run(p, &ContextRef::parse(ctx), cfg, s.to_world().unwrap()).unwrap()
}

#[test]
fn three_mixed_is_served() {
    let s = shipped("three-mixed");
    for ctx in ["benign", "dsl-benign"] {
        let r = run_scenario("webserver", ctx, &s, Via::Target);
        let status = |c: &str| r.responses[c].iter().map(|b| http::status_of(b)).collect::<Vec<_>>();
        assert_eq!(status("alice"), [Some(200)]);
        assert_eq!(status("bob"), [Some(404)]);
        assert_eq!(status("carol"), [Some(200)]);
        assert!(r.verdicts.iter().all(|v| v.holds), "{r}");
    }
}

#[test]
fn traversal_is_refused_by_the_monitor() {
    let s = shipped("traversal");
    let r = run_scenario("webserver", "benign", &s, Via::Source);
    assert_eq!(r.diagnostics.len(), 1, "{r}");
    assert_eq!(r.diagnostics[0].mechanism, Mechanism::Monitor);
    let body = &r.responses["mallory"][0];
    assert!(!body.windows(4).any(|w| w == b"root"));
    assert_eq!(r.verdict("every_request_gets_a_response"), Some(true));
}

#[test]
fn logging_and_zip_scenarios_run() {
    let r = run_scenario("logger", "log-then-open", &shipped("logging"), Via::Target);
    assert_eq!(r.mode, Mode::CtxFirst);
    assert_eq!(r.verdict("enforced_locally"), Some(true), "{r}");
    let r = run_scenario("zip", "benign", &shipped("zip"), Via::Target);
    assert!(r.verdicts.iter().all(|v| v.holds), "{r}");
    let r = run_scenario("zip", "dsl-own-file", &shipped("zip"), Via::Source);
    assert!(r.diagnostics.iter().all(|p| p.mechanism == Mechanism::Monitor), "{r}");
    assert!(r.verdicts.iter().all(|v| v.holds), "{r}");
}

#[test]
fn reports_render_as_text_and_json() {
    let r = run_scenario("webserver", "adv1", &shipped("three-mixed"), Via::Target);
    let text = r.to_string();
    assert!(text.contains("verdicts:") && text.contains("blocked:"), "{text}");
    let j = r.to_json();
    assert_eq!(j["program"], "webserver");
    assert_eq!(j["context"], "adv1");
    assert_eq!(j["mode"], "prog-first");
    assert_eq!(j["verdicts"]["attribution"], true);
    assert_eq!(j["trace"].as_array().unwrap().len(), r.trace.len());
    assert_eq!(j["diagnostics"][0]["mechanism"], r.diagnostics[0].mechanism.to_string());
    assert_eq!(j["audit"]["mediated_calls"].as_u64(), Some(r.audit.mediated_calls as u64));
}

#[test]
fn no_shipped_context_escapes_its_guarantee() {
    for name in PROGRAM_NAMES {
        let programs = if name == "webserver" {
            vec![Program::WebServer(WebPolicy::Standard), Program::WebServer(WebPolicy::AllowAllInTmp)]
        } else {
            vec![Program::from_name(name, None).unwrap()]
        };
        for p in programs {
            let worlds = default_worlds(p);
            let named = p.context_names().iter().map(|c| c.to_string());
            let dsl = p.dsl_context_names().iter().map(|c| format!("dsl-{c}"));
            for ctx in named.chain(dsl) {
                for via in [Via::Target, Via::Source] {
                    let v = find_violation(p, &ContextRef::parse(&ctx), via, &worlds).unwrap();
                    assert!(v.is_none(), "{name}/{ctx}/{via}: {v:?}");
                }
            }
        }
    }
}

#[test]
fn contexts_can_be_given_as_source_text() {
    let src = r#"\c:fd. \req:bytes. \send:bytes -> either unit err.
        send (http_response 404 "nothing here")"#;
    let p = Program::WebServer(WebPolicy::Standard);
    let s = shipped("three-mixed");
    let r = run(p, &ContextRef::Source(src.into()), RunConfig::natural(p, s.max_iterations), s.to_world().unwrap()).unwrap();
    assert_eq!(r.context, "<source>");
    assert_eq!(r.responses.values().flatten().count(), 3);
    assert!(r.responses.values().flatten().all(|b| http::status_of(b) == Some(404)));

    let bad = ContextRef::Source("\\x:int. x".into());
    assert!(matches!(
        run(p, &bad, RunConfig::natural(p, 1), s.to_world().unwrap()),
        Err(DemoError::Dsl(_))
    ));
}

#[test]
fn malformed_scenarios_are_rejected() {
    let cases = [
        (r#"{"files": {"/a": "***"}}"#, "base64"),
        (r#"{"files": {"rel/a": "aGk="}}"#, "absolute"),
        (r#"{"policy": "nope"}"#, "policy"),
        (r#"{"max_iterations": 0}"#, "positive"),
        (r#"{"requests": [{"client_id": 1}]}"#, "JSON"),
    ];
    for (text, needle) in cases {
        let err: ScenarioError = Scenario::from_json(text).unwrap_err();
        assert!(err.to_string().contains(needle), "{text}: {err}");
    }
    let s = Scenario::from_json("{}").unwrap();
    assert_eq!(s.max_iterations, 32);
}

#[test]
fn policies_must_suit_the_program() {
    assert!(Program::from_name("webserver", Some("allow_all_in_tmp")).is_ok());
    assert!(Program::from_name("zip", Some("zip")).is_ok());
    for (prog, policy) in [("zip", "logging"), ("logger", "webserver"), ("webserver", "zip")] {
        assert!(matches!(Program::from_name(prog, Some(policy)), Err(DemoError::PolicyMismatch(..))));
    }
}

#[test]
fn only_the_tight_budget_leaves_connections_unanswered() {
    let p = Program::WebServer(WebPolicy::Standard);
    let prop = seclink::demos::property(p, "every_connection_answered").unwrap();
    let all = default_worlds(p);
    let (tight, rest): (Vec<_>, Vec<_>) = all.into_iter().partition(|w| w.name == "tight-budget");
    for ctx in ["benign", "adv1", "dsl-adv5"] {
        let c = ContextRef::parse(ctx);
        assert!(seclink::demos::find_violation_of(p, &c, Via::Target, &rest, &prop).unwrap().is_none(), "{ctx}");
        let v = seclink::demos::find_violation_of(p, &c, Via::Target, &tight, &prop).unwrap().unwrap();
        assert_eq!(v.result, 0);
        // The guarantee still holds there: nothing was read, so nothing is owed.
        assert!(find_violation(p, &c, Via::Target, &tight).unwrap().is_none());
    }
    assert!(seclink::demos::property(Program::Logging, "every_connection_answered").is_none());
    assert!(seclink::demos::property(Program::Logging, "psi").is_some());
}
