//! mmflow: batch runner for grid curvature flows.
//!
//!   mmflow run --config <path> --out <dir>
//!   mmflow preset --name <name> [--out <dir>] [--list]
//!   mmflow verify --suite <acceptance|quick> [--out <dir>]
//!
//! Global flags: --threads <k> (or MMFLOW_THREADS), --seed <u64>.
//! Exit code 0 iff every activated check passed.

use std::path::PathBuf;
use std::process::ExitCode;

use mmflow::config::{parse_config, RunConfig};
use mmflow::presets::{preset, preset_names, preset_text};
use mmflow::runner::run;
use mmflow::suite::{quick_ids, run_criterion, run_suite_config, CRITERIA};

struct Args {
    command: String,
    options: std::collections::BTreeMap<String, String>,
    flags: Vec<String>,
}

fn parse_args() -> Result<Args, String> {
    let mut argv = std::env::args().skip(1);
    let command = argv.next().ok_or_else(usage)?;
    let mut options = std::collections::BTreeMap::new();
    let mut flags = Vec::new();
    while let Some(arg) = argv.next() {
        let name = arg.strip_prefix("--").ok_or_else(|| format!("unexpected argument `{arg}`"))?;
        match name {
            "list" => flags.push(name.to_string()),
            _ => {
                let value = argv.next().ok_or_else(|| format!("--{name} needs a value"))?;
                options.insert(name.to_string(), value);
            }
        }
    }
    Ok(Args { command, options, flags })
}

fn usage() -> String {
    "usage: mmflow <run|preset|verify> [--config <path>] [--name <preset>] \
     [--suite <acceptance|quick>] [--out <dir>] [--threads <k>] [--seed <u64>] [--list]"
        .to_string()
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn apply_globals(args: &Args) {
    if let Some(t) = args.options.get("threads") {
        std::env::set_var("MMFLOW_THREADS", t);
    }
    if let Some(s) = args.options.get("seed") {
        std::env::set_var("MMFLOW_SEED", s);
    }
}

fn dispatch() -> Result<bool, String> {
    let args = parse_args()?;
    apply_globals(&args);
    match args.command.as_str() {
        "run" => {
            let path = args.options.get("config").ok_or("run needs --config <path>")?;
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            let out = args.options.get("out").map(PathBuf::from);
            execute(parse_config(&text).map_err(render_errors)?, out)
        }
        "preset" => {
            if args.flags.iter().any(|f| f == "list") {
                for name in preset_names() {
                    println!("{name}");
                }
                return Ok(true);
            }
            let name = args.options.get("name").ok_or("preset needs --name <preset> or --list")?;
            let cfg = preset(name)?;
            if let Some(dir) = args.options.get("out") {
                let dir = PathBuf::from(dir);
                std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
                std::fs::write(dir.join(format!("{name}.cfg")), preset_text(name).unwrap())
                    .map_err(|e| e.to_string())?;
                execute(cfg, Some(dir.join(name)))
            } else {
                execute(cfg, None)
            }
        }
        "verify" => {
            let suite = args.options.get("suite").map(String::as_str).unwrap_or("acceptance");
            let ids: Vec<&str> = match suite {
                "acceptance" => CRITERIA.to_vec(),
                "quick" => quick_ids(),
                other => return Err(format!("unknown suite `{other}` (want acceptance|quick)")),
            };
            let mut all = true;
            for id in ids {
                let res = run_criterion(id);
                println!("{}", res.summary());
                for d in &res.details {
                    println!("    {d}");
                }
                all &= res.passed;
            }
            println!("suite: {}", if all { "PASS" } else { "FAIL" });
            Ok(all)
        }
        other => Err(format!("unknown command `{other}`\n{}", usage())),
    }
}

fn render_errors(errs: Vec<mmflow::config::ConfigError>) -> String {
    let lines: Vec<String> = errs.iter().map(|e| format!("  {e}")).collect();
    format!("invalid configuration:\n{}", lines.join("\n"))
}

fn execute(cfg: RunConfig, out: Option<PathBuf>) -> Result<bool, String> {
    match cfg {
        RunConfig::Flow(flow) => {
            let outcome = run(&flow, out.as_deref())?;
            let rendered = outcome.report.render(None);
            print!("{rendered}");
            Ok(outcome.passed)
        }
        RunConfig::Suite(s) => {
            let res = run_suite_config(&s);
            println!("{}", res.summary());
            for d in &res.details {
                println!("    {d}");
            }
            Ok(res.passed)
        }
    }
}
