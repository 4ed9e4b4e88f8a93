//! Command-line front door for the analyzer.
//!
//! `check` runs a single-order abstract analysis or the full
//! refinement loop; `simulate` searches the rendez-vous semantics for a
//! concrete witness. Exit status of `check`: 0 target unreachable,
//! 1 reachable, 2 unknown; 64 usage or parse errors, 65 resource
//! exhaustion. `simulate` exits 1 when a witness is found and 0 when
//! none exists within the depth.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sdpn_core::abstraction::{AbsKind, KDomain};
use sdpn_core::automata::{accepts, dump, from_pattern};
use sdpn_core::cegar::{
    check_order_prepared, run_cegar, Caps, CegarOptions, CheckReport, Prepared, Verdict,
};
use sdpn_core::ingest::{
    cfg_to_sdpn, enumerate_pattern, parse_cfgp, parse_config_pattern, parse_sdpn, ConfigPattern,
    EnumBounds,
};
use sdpn_core::model::{bounded_search_strict, Configuration, Sdpn};
use sdpn_core::report::{self, Report, RunConfig};

#[derive(Parser)]
#[command(name = "sdpn", version, about = "Reachability analysis for synchronized dynamic pushdown networks", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Abstract reachability analysis between two configuration sets.
    Check(CheckArgs),
    /// Bounded concrete search under the rendez-vous semantics.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Order,
    Cegar,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Abstraction {
    Prefix,
    Suffix,
    Both,
}

#[derive(Args)]
struct CheckArgs {
    /// Model file (.sdpn network or .cfgp program).
    #[arg(long)]
    model: PathBuf,
    /// Initial configuration pattern (defaults to the program's start
    /// configuration for .cfgp models).
    #[arg(long)]
    init: Option<String>,
    /// Target configuration pattern.
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value = "cegar")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "both")]
    abstraction: Abstraction,
    /// Abstraction order for --mode order.
    #[arg(long)]
    order: Option<usize>,
    /// Highest order tried by --mode cegar.
    #[arg(long, default_value = "3")]
    max_order: usize,
    /// Validation search depth (defaults to the current order).
    #[arg(long)]
    budget: Option<usize>,
    /// Node cap for concrete searches.
    #[arg(long, default_value = "2000000")]
    node_cap: usize,
    /// Cap on demanded label-table entries.
    #[arg(long, default_value = "4000000")]
    table_cap: usize,
    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Dump the constructed automata into this directory.
    #[arg(long)]
    emit_automata: Option<PathBuf>,
    /// Log solver table updates to standard error.
    #[arg(long)]
    log_solver: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    target: String,
    /// Search depth.
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value = "2000000")]
    node_cap: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

const EXIT_UNREACHABLE: u8 = 0;
const EXIT_REACHABLE: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_RESOURCE: u8 = 65;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let mut logger = env_logger::Builder::from_default_env();
    if let Command::Check(args) = &cli.command {
        if args.log_solver {
            logger.filter_module("sdpn_core::labelling", log::LevelFilter::Trace);
        }
    }
    logger.init();
    match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

/// Loads a model; .cfgp programs also yield their start configuration.
fn load_model(path: &Path) -> Result<(Sdpn, Option<Configuration>), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {}", path.display(), e))?;
    if path.extension().and_then(|e| e.to_str()) == Some("cfgp") {
        let ast = parse_cfgp(&text).map_err(|e| e.to_string())?;
        let (m, init) = cfg_to_sdpn(&ast).map_err(|e| e.to_string())?;
        Ok((m, Some(init)))
    } else {
        let m = parse_sdpn(&text).map_err(|e| e.to_string())?;
        Ok((m, None))
    }
}

fn init_pattern(
    m: &Sdpn,
    given: &Option<String>,
    translated: Option<Configuration>,
) -> Result<(ConfigPattern, String), String> {
    match given {
        Some(text) => {
            let p = parse_config_pattern(text, m).map_err(|e| e.to_string())?;
            Ok((p, text.clone()))
        }
        None => {
            let c = translated.ok_or("--init is required for .sdpn models")?;
            let text = sdpn_core::testkit::exact_pattern_text(m, &c);
            let p = parse_config_pattern(&text, m).map_err(|e| e.to_string())?;
            Ok((p, text))
        }
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {}", msg);
    ExitCode::from(EXIT_USAGE)
}

fn write_report(path: &Option<PathBuf>, report: &Report) -> Result<(), String> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    match path {
        Some(p) => std::fs::write(p, text.as_bytes())
            .map_err(|e| format!("cannot write {}: {}", p.display(), e)),
        None => {
            println!("{}", text);
            Ok(())
        }
    }
}

fn emit_automata(dir: &Path, m: &Sdpn, prepared: &Prepared) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let write = |name: &str, text: String| {
        std::fs::write(dir.join(name), text).map_err(|e| e.to_string())
    };
    write("target.aut", dump(&prepared.target_automaton, m))?;
    write("saturated.aut", dump(&prepared.saturated, m))?;
    write("product.aut", dump(&prepared.product.auto, m))?;
    Ok(())
}

fn cmd_check(args: CheckArgs) -> ExitCode {
    let started = Instant::now();
    let (m, translated_init) = match load_model(&args.model) {
        Ok(x) => x,
        Err(e) => return usage_error(&e),
    };
    let (init, init_text) = match init_pattern(&m, &args.init, translated_init) {
        Ok(x) => x,
        Err(e) => return usage_error(&e),
    };
    let target = match parse_config_pattern(&args.target, &m) {
        Ok(p) => p,
        Err(e) => return usage_error(&e.to_string()),
    };
    let caps = Caps {
        node_cap: args.node_cap,
        table_cap: args.table_cap,
        ..Caps::default()
    };
    let model_text = args.model.display().to_string();

    match args.mode {
        Mode::Order => {
            let Some(order) = args.order else {
                return usage_error("--mode order requires --order N");
            };
            let prepared = match Prepared::build(&m, &init, &target, caps) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {}", e);
                    return ExitCode::from(EXIT_RESOURCE);
                }
            };
            if let Some(dir) = &args.emit_automata {
                if let Err(e) = emit_automata(dir, &prepared.model, &prepared) {
                    return usage_error(&e);
                }
            }
            let kinds: &[AbsKind] = match args.abstraction {
                Abstraction::Prefix => &[AbsKind::Prefix],
                Abstraction::Suffix => &[AbsKind::Suffix],
                Abstraction::Both => &[AbsKind::Prefix, AbsKind::Suffix],
            };
            let mut sections: Vec<CheckReport> = Vec::new();
            for kind in kinds {
                match check_order_prepared(&prepared, KDomain::new(*kind, order)) {
                    Ok(r) => sections.push(r),
                    Err(e) => {
                        eprintln!("error: {}", e);
                        return ExitCode::from(EXIT_RESOURCE);
                    }
                }
            }
            let cfg = RunConfig {
                order: Some(order),
                max_order: None,
                budget: args.budget,
                depth: None,
                node_cap: caps.node_cap,
                table_cap: caps.table_cap,
            };
            let rep = report::order_report(
                &prepared.model,
                &sections,
                &model_text,
                &init_text,
                &args.target,
                cfg,
                started.elapsed().as_millis(),
            );
            let proven = rep.outcome == "unreachable";
            if let Err(e) = write_report(&args.report, &rep) {
                return usage_error(&e);
            }
            ExitCode::from(if proven { EXIT_UNREACHABLE } else { EXIT_UNKNOWN })
        }
        Mode::Cegar => {
            let opts = CegarOptions {
                max_order: args.max_order,
                budget: args.budget,
                caps,
            };
            if let Some(dir) = &args.emit_automata {
                match Prepared::build(&m, &init, &target, caps) {
                    Ok(p) => {
                        if let Err(e) = emit_automata(dir, &p.model, &p) {
                            return usage_error(&e);
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {}", e);
                        return ExitCode::from(EXIT_RESOURCE);
                    }
                }
            }
            let run = match run_cegar(&m, &init, &target, opts) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {}", e);
                    return ExitCode::from(EXIT_RESOURCE);
                }
            };
            let cfg = RunConfig {
                order: None,
                max_order: Some(args.max_order),
                budget: args.budget,
                depth: None,
                node_cap: caps.node_cap,
                table_cap: caps.table_cap,
            };
            let norm = if m.is_normal() {
                m.clone()
            } else {
                sdpn_core::model::normalize(&m)
            };
            let rep = report::cegar_report(&norm, &run, &model_text, &init_text, &args.target, cfg);
            let code = match &run.verdict {
                Verdict::Unreachable { .. } => EXIT_UNREACHABLE,
                Verdict::Reachable { .. } => EXIT_REACHABLE,
                Verdict::Unknown { .. } => EXIT_UNKNOWN,
            };
            if let Err(e) = write_report(&args.report, &rep) {
                return usage_error(&e);
            }
            ExitCode::from(code)
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> ExitCode {
    let (m, translated_init) = match load_model(&args.model) {
        Ok(x) => x,
        Err(e) => return usage_error(&e),
    };
    let (init, _) = match init_pattern(&m, &args.init, translated_init) {
        Ok(x) => x,
        Err(e) => return usage_error(&e),
    };
    let target = match parse_config_pattern(&args.target, &m) {
        Ok(p) => p,
        Err(e) => return usage_error(&e.to_string()),
    };
    let start_set = enumerate_pattern(&init, &m, EnumBounds::default());
    let target_auto = from_pattern(&target, &m);
    let found = bounded_search_strict(
        &m,
        &start_set,
        &|c| accepts(&target_auto, c),
        args.depth,
        args.node_cap,
    );
    match found {
        Ok((Some(trace), _)) => {
            println!("trace of length {}:", trace.len());
            println!("  {}", m.display_config(&trace.start));
            for step in &trace.steps {
                let rules = match step.rules {
                    sdpn_core::model::StepRules::One { rule, .. } => {
                        m.rules[rule.0 as usize].name.clone()
                    }
                    sdpn_core::model::StepRules::Sync {
                        left_rule,
                        right_rule,
                        ..
                    } => format!(
                        "{} <-> {}",
                        m.rules[left_rule.0 as usize].name, m.rules[right_rule.0 as usize].name
                    ),
                };
                println!("  --[{}]--> {}", rules, m.display_config(&step.resulting));
            }
            if let Some(path) = &args.report {
                let rep = report::trace_report(&m, &trace);
                let text = serde_json::to_string_pretty(&rep).expect("trace serializes");
                if std::fs::write(path, text).is_err() {
                    return usage_error("cannot write report");
                }
            }
            ExitCode::from(EXIT_REACHABLE)
        }
        Ok((None, _)) => {
            println!("none");
            ExitCode::from(EXIT_UNREACHABLE)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(EXIT_RESOURCE)
        }
    }
}
