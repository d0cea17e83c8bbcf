use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Parser, Subcommand};

use seclink::contracts::{ConstraintReport, ContractBundle, ValidationConfig};
use seclink::demos::{
    default_worlds, find_violation_of, logging, property, run, webserver, zip, ContextRef, Mode, Program, Report, RunConfig,
    Scenario, ScriptedWorld, Via, WebPolicy, PROGRAM_NAMES,
};
use seclink::effect::Trace;
use seclink::monitor::MonitorState;

#[derive(Parser)]
#[command(name = "seclink", version, about = "Link untrusted contexts against monitored programs and check the runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program with a context in a scenario's world.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        program: String,
        /// A built-in context, `dsl-NAME` for a bundled source context, or
        /// `file:PATH` for a context-language file.
        #[arg(long)]
        context: String,
        /// prog-first or ctx-first; defaults to the program's own.
        #[arg(long)]
        mode: Option<String>,
        /// target (compiled program, raw context) or source (back-translated
        /// context).
        #[arg(long, default_value = "target")]
        via: String,
        /// Overrides the scenario's policy.
        #[arg(long)]
        policy: Option<String>,
        /// A verdict or property to require; `psi` names the program's
        /// guarantee.
        #[arg(long = "check")]
        checks: Vec<String>,
        #[arg(long)]
        dump_trace: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Search the built-in worlds, or one scenario, for a run outside the
    /// program's guarantee.
    Check {
        #[arg(long)]
        program: String,
        #[arg(long)]
        context: String,
        #[arg(long, default_value = "target")]
        via: String,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Defaults to the program's guarantee.
        #[arg(long, default_value = "psi")]
        property: String,
    },
    /// Run the randomized constraint suite on an interface's contracts.
    VerifyBundle {
        /// webserver, allow_all_in_tmp, logging or zip.
        #[arg(long)]
        interface: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Replace every check by `true` first.
        #[arg(long)]
        weakened: bool,
    },
    /// List programs and their contexts.
    List,
}

fn context_ref(s: &str) -> Result<ContextRef> {
    Ok(match s.strip_prefix("file:") {
        Some(path) => ContextRef::Source(fs::read_to_string(path).with_context(|| format!("reading {path}"))?),
        None => ContextRef::parse(s),
    })
}

fn via(s: &str) -> Result<Via> {
    Via::from_name(s).ok_or_else(|| anyhow!("--via must be target or source, not `{s}`"))
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("loading {}", path.display()))
}

fn dump(trace: &Trace) -> String {
    trace.iter().map(|e| format!("{e}\n")).collect()
}

fn print_violation(what: &str, trace: &Trace, result: i64) {
    println!("VIOLATED {what}");
    println!("result: {result}");
    println!("trace:");
    for e in trace {
        println!("  {e}");
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    scenario: &Path,
    program: &str,
    context: &str,
    mode: Option<&str>,
    via_name: &str,
    policy: Option<&str>,
    checks: &[String],
    dump_trace: Option<&Path>,
    json: bool,
) -> Result<bool> {
    let s = load_scenario(scenario)?;
    let p = Program::from_name(program, policy.or(s.policy.as_deref()))?;
    let mode = match mode {
        Some(m) => Mode::from_name(m).ok_or_else(|| anyhow!("--mode must be prog-first or ctx-first, not `{m}`"))?,
        None => p.mode(),
    };
    let cfg = RunConfig {
        mode,
        via: via(via_name)?,
        max_iterations: s.max_iterations,
    };
    let report: Report = run(p, &context_ref(context)?, cfg, s.to_world()?)?;
    if let Some(path) = dump_trace {
        fs::write(path, dump(&report.trace)).with_context(|| format!("writing {}", path.display()))?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&report.to_json())?);
    } else {
        print!("{report}");
    }
    let mut ok = true;
    for name in checks {
        let holds = match (report.verdict(name), property(p, name)) {
            (Some(v), _) => v,
            (None, Some(prop)) => prop.holds(&report.trace, report.result),
            (None, None) => bail!("no property `{name}` for {}", p.name()),
        };
        if !holds {
            print_violation(name, &report.trace, report.result);
            ok = false;
        }
    }
    Ok(ok)
}

fn cmd_check(
    program: &str,
    context: &str,
    via_name: &str,
    policy: Option<&str>,
    scenario: Option<&Path>,
    prop_name: &str,
) -> Result<bool> {
    let (worlds, scenario_policy) = match scenario {
        Some(path) => {
            let s = load_scenario(path)?;
            let w = ScriptedWorld {
                name: "scenario",
                world: s.to_world()?,
                max_iterations: s.max_iterations,
            };
            (Some(vec![w]), s.policy)
        }
        None => (None, None),
    };
    let p = Program::from_name(program, policy.or(scenario_policy.as_deref()))?;
    let worlds = worlds.unwrap_or_else(|| default_worlds(p));
    let prop = property(p, prop_name).ok_or_else(|| anyhow!("no property `{prop_name}` for {}", p.name()))?;
    match find_violation_of(p, &context_ref(context)?, via(via_name)?, &worlds, &prop)? {
        Some(v) => {
            print_violation(&format!("{} in world {}", prop.name(), v.world), &v.trace, v.result);
            Ok(false)
        }
        None => {
            println!("{} holds in {} world(s)", prop.name(), worlds.len());
            Ok(true)
        }
    }
}

fn validate<S: MonitorState>(b: ContractBundle<S>, weakened: bool, cfg: &ValidationConfig) -> Result<ConstraintReport> {
    let b = if weakened { b.weakened() } else { b };
    Ok(seclink::contracts::validate(&b, cfg)?)
}

fn cmd_verify(interface: &str, samples: usize, seed: u64, weakened: bool) -> Result<bool> {
    let cfg = ValidationConfig {
        samples,
        seed,
        ..ValidationConfig::default()
    };
    let report = match interface {
        "webserver" => validate(webserver::interface(WebPolicy::Standard).bundle(), weakened, &cfg)?,
        "allow_all_in_tmp" => validate(webserver::interface(WebPolicy::AllowAllInTmp).bundle(), weakened, &cfg)?,
        "logging" => validate(logging::interface().bundle(), weakened, &cfg)?,
        "zip" => validate(zip::interface().bundle(), weakened, &cfg)?,
        _ => bail!("unknown interface `{interface}`"),
    };
    print!("{report}");
    println!("{}", if report.passed() { "PASS" } else { "FAIL" });
    Ok(report.passed())
}

fn cmd_list() {
    for name in PROGRAM_NAMES {
        let p = Program::from_name(name, None).expect("known program");
        println!("{name} ({}, policy {})", p.mode(), p.policy_name());
        println!("  contexts: {}", p.context_names().join(" "));
        let dsl: Vec<String> = p.dsl_context_names().iter().map(|c| format!("dsl-{c}")).collect();
        println!("  source contexts: {}", dsl.join(" "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run {
            scenario,
            program,
            context,
            mode,
            via,
            policy,
            checks,
            dump_trace,
            json,
        } => cmd_run(
            scenario,
            program,
            context,
            mode.as_deref(),
            via,
            policy.as_deref(),
            checks,
            dump_trace.as_deref(),
            *json,
        ),
        Command::Check {
            program,
            context,
            via,
            policy,
            scenario,
            property,
        } => cmd_check(program, context, via, policy.as_deref(), scenario.as_deref(), property),
        Command::VerifyBundle {
            interface,
            samples,
            seed,
            weakened,
        } => cmd_verify(interface, *samples, *seed, *weakened),
        Command::List => {
            cmd_list();
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
