use std::path::PathBuf;
use std::process::{Command, Output};

fn seclink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seclink"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("seclink-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

/// Three requests but room for only two iterations of the server loop.
fn starved() -> PathBuf {
    let mut s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root().join("scenarios/three-mixed.json")).unwrap()).unwrap();
    s["max_iterations"] = 2.into();
    temp("starved.json", &s.to_string())
}

#[test]
fn run_prints_a_report_and_dumps_the_trace() {
    let dump = temp("trace.txt", "");
    let o = seclink(&[
        "run", "--scenario", "scenarios/three-mixed.json", "--program", "webserver", "--context", "benign",
        "--mode", "prog-first", "--check", "psi", "--dump-trace", dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("every_request_gets_a_response    holds"), "{out}");
    let lines = std::fs::read_to_string(&dump).unwrap();
    assert!(lines.lines().next().unwrap().starts_with("Prog Socket () -> Inl"));
    assert!(lines.lines().any(|l| l.starts_with("Ctx Openfile \"/temp/index.html\"")), "{lines}");
    assert!(lines.lines().all(|l| l.contains(" -> ")));
}

#[test]
fn run_emits_json() {
    let o = seclink(&[
        "run", "--scenario", "scenarios/traversal.json", "--program", "webserver", "--context", "dsl-benign", "--via",
        "source", "--json",
    ]);
    assert!(o.status.success());
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["via"], "source");
    assert_eq!(j["diagnostics"][0]["mechanism"], "monitor");
    assert_eq!(j["verdicts"]["every_request_gets_a_response"], true);
}

#[test]
fn failed_checks_exit_nonzero_with_the_trace() {
    let s = starved();
    let o = seclink(&[
        "run", "--scenario", s.to_str().unwrap(), "--program", "webserver", "--context", "benign", "--check",
        "every_request_gets_a_response", "--check", "every_connection_answered",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(!out.contains("VIOLATED every_request_gets_a_response"), "{out}");
    assert!(out.contains("VIOLATED every_connection_answered"), "{out}");
    assert!(out.contains("result: 0"));

    let o = seclink(&["check", "--program", "webserver", "--context", "benign", "--scenario", s.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = seclink(&[
        "check", "--program", "webserver", "--context", "benign", "--scenario", s.to_str().unwrap(), "--property",
        "every_connection_answered",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("VIOLATED") && out.contains("trace:") && out.contains("Prog Accept"), "{out}");
}

#[test]
fn check_passes_for_shipped_contexts() {
    for (program, ctx) in [("webserver", "adv4"), ("logger", "unlogged-open"), ("zip", "dsl-own-file")] {
        let o = seclink(&["check", "--program", program, "--context", ctx, "--via", "source"]);
        assert!(o.status.success(), "{program}/{ctx}: {}", stdout(&o));
        assert!(stdout(&o).contains("holds in"));
    }
}

#[test]
fn contexts_load_from_files() {
    let o = seclink(&[
        "run", "--scenario", "scenarios/zip.json", "--program", "zip", "--context", "file:crates/core/ctx/zip/benign.ctx",
        "--check", "ctx_only_touches_prog_fds",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let bad = temp("bad.ctx", "\\x:int. x");
    let o = seclink(&[
        "run", "--scenario", "scenarios/zip.json", "--program", "zip", "--context",
        &format!("file:{}", bad.display()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("type error"));
}

#[test]
fn verify_bundle_reports_pass_and_fail() {
    let o = seclink(&["verify-bundle", "--interface", "zip", "--samples", "400"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).trim_end().ends_with("PASS"));
    let o = seclink(&["verify-bundle", "--interface", "webserver", "--samples", "400", "--weakened"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).trim_end().ends_with("FAIL"));
    let o = seclink(&["verify-bundle", "--interface", "ftp"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let mismatch = seclink(&["run", "--scenario", "scenarios/logging.json", "--program", "logger", "--context", "idle", "--mode", "prog-first"]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("ctx-first"));
    let unknown = seclink(&["run", "--scenario", "scenarios/zip.json", "--program", "zip", "--context", "nope"]);
    assert_eq!(unknown.status.code(), Some(2));
    let missing = seclink(&["run", "--scenario", "scenarios/none.json", "--program", "zip", "--context", "benign"]);
    assert_eq!(missing.status.code(), Some(2));
}
