//! `ionwalk` command-line entry point.

mod config;
mod error;
mod output;
mod scenarios;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{parse_overrides, Flags, Inputs, RunConfig};
use error::CliError;
use output::{write_json, Manifest, Output, Versions};
use scenarios::{Ctx, SCENARIOS};

#[derive(Parser)]
#[command(name = "ionwalk", version, about = "Trapped-ion quantum walk simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV/JSON artifacts.
    ///
    /// Scenario keys follow as `--key value`; see `ionwalk list`.
    Run(RunArgs),
    /// List scenarios and their keys with defaults.
    List {
        /// Print the key table as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario name (alternative to the positional form).
    #[arg(long)]
    scenario: Option<String>,
    /// Flat JSON object of key → value; command-line keys take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: out/<scenario>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Size of the worker pool [default: number of cores].
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for noise studies [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// `[SCENARIO] [--key value ...]`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "ARGS")]
    args: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List { json } => {
            list(json);
            ExitCode::SUCCESS
        }
        Command::Run(args) => {
            let mut out_dir = None;
            let mut scenario = None;
            match run(args, &mut out_dir, &mut scenario) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    let report = e.to_json(scenario.as_deref());
                    eprintln!("{report}");
                    if let Some(dir) = out_dir {
                        let _ = std::fs::create_dir_all(&dir);
                        let _ = write_json(&dir.join("error.json"), &report);
                    }
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}

fn run(args: RunArgs, out_dir: &mut Option<PathBuf>, scenario_name: &mut Option<String>) -> Result<(), CliError> {
    let started = Instant::now();
    let mut rest = args.args.as_slice();
    let mut positional = None;
    if let Some(first) = rest.first().filter(|a| !a.starts_with('-')) {
        positional = Some(first.clone());
        rest = &rest[1..];
    }
    if let (Some(a), Some(b)) = (&positional, &args.scenario) {
        if a != b {
            return Err(CliError::Config(format!("scenario given twice: `{a}` and `{b}`")));
        }
    }
    let flags = Flags {
        scenario: args.scenario.or(positional),
        config: args.config,
        out: args.out,
        workers: args.workers,
        seed: args.seed,
        overrides: parse_overrides(rest)?,
    };
    let rc = RunConfig::resolve(flags)?;
    *scenario_name = Some(rc.scenario.clone());
    *out_dir = Some(rc.out.clone());
    let scenario = scenarios::find(&rc.scenario).ok_or_else(|| {
        let names: Vec<&str> = SCENARIOS.iter().map(|s| s.name).collect();
        CliError::Config(format!(
            "unknown scenario `{}`; available: {}",
            rc.scenario,
            names.join(", ")
        ))
    })?;
    let inputs = Inputs::resolve(&(scenario.keys)(), &rc.raw)?;

    if let Some(n) = rc.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size worker pool: {e}")))?;
    }
    let mut out = Output::create(&rc.out)?;
    let stale = out.dir().join("error.json");
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| CliError::io(stale.display(), e))?;
    }
    let mut ctx = Ctx {
        inputs: &inputs,
        out: &mut out,
        seed: rc.seed,
        sim: Vec::new(),
    };
    let summary = (scenario.run)(&mut ctx)?;
    let sim_params = ctx.sim;

    let mut outputs = out.files().to_vec();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        scenario: scenario.name.to_string(),
        versions: Versions::current(),
        seed: rc.seed,
        workers: rayon::current_num_threads(),
        config_file: rc.config_file.map(|p| p.display().to_string()),
        inputs: inputs.to_json(),
        sim_params,
        outputs,
        summary,
        runtime_s: started.elapsed().as_secs_f64(),
    };
    out.json("manifest.json", &manifest)?;
    println!(
        "{}",
        serde_json::to_string(&json!({ "scenario": scenario.name, "out": rc.out, "summary": manifest.summary }))?
    );
    Ok(())
}

fn list(as_json: bool) {
    let text = if as_json {
        let v: Vec<Value> = SCENARIOS
            .iter()
            .map(|s| {
                let keys: Vec<Value> = (s.keys)()
                    .iter()
                    .map(|k| json!({ "name": k.name, "type": format!("{:?}", k.kind).to_lowercase(), "default": k.default, "help": k.help }))
                    .collect();
                json!({ "name": s.name, "about": s.about, "keys": keys })
            })
            .collect();
        serde_json::to_string_pretty(&v).expect("static table serializes") + "\n"
    } else {
        let runner: Vec<String> = config::RUNNER_KEYS.iter().map(|k| format!("--{k}")).collect();
        let mut t = format!("runner keys (any scenario): {}\n\n", runner.join(" "));
        for s in &SCENARIOS {
            t += &format!("{}: {}\n", s.name, s.about);
            for k in (s.keys)() {
                t += &format!("    --{:<16} {:<12} {}\n", k.name, k.default.to_string(), k.help);
            }
            t.push('\n');
        }
        t
    };
    // a closed pipe is not an error here
    let _ = std::io::stdout().write_all(text.as_bytes());
}
