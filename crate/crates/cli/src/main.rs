//! Batch front end: loads a run configuration, applies flag overrides, and
//! executes the scenario to completion.
//!
//! Exit status: 0 on success, 1 on configuration errors, 2 on solver
//! failures.

use std::process::ExitCode;
use yieldflow::config::{parse_config_with_scenario, RunConfig};
use yieldflow::runner::{run, RunError};
use yieldflow::scenarios::builtin_scenarios;

const USAGE: &str = "usage: simulate [--config PATH] [--output DIR] [--scenario NAME] \
[--steps N] [--epsilon X] [--list-scenarios]

Runs one scenario to its end time (or for an exact step count) and writes
diagnostics.csv, snapshot_STEPINDEX.dat files and summary.txt into the
output directory. Flags override the corresponding config keys.";

struct Args {
    config_path: Option<String>,
    output: Option<String>,
    scenario: Option<String>,
    steps: Option<usize>,
    epsilon: Option<f64>,
    list_scenarios: bool,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut args = Args {
        config_path: None,
        output: None,
        scenario: None,
        steps: None,
        epsilon: None,
        list_scenarios: false,
    };
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        let mut take = |name: &str| -> Result<String, String> {
            it.next()
                .cloned()
                .ok_or_else(|| format!("{name} requires a value"))
        };
        match arg.as_str() {
            "--config" => args.config_path = Some(take("--config")?),
            "--output" => args.output = Some(take("--output")?),
            "--scenario" => args.scenario = Some(take("--scenario")?),
            "--steps" => {
                let raw = take("--steps")?;
                args.steps = Some(
                    raw.parse::<usize>()
                        .map_err(|_| format!("--steps: expected an integer, got '{raw}'"))?,
                );
            }
            "--epsilon" => {
                let raw = take("--epsilon")?;
                args.epsilon = Some(
                    raw.parse::<f64>()
                        .map_err(|_| format!("--epsilon: expected a number, got '{raw}'"))?,
                );
            }
            "--list-scenarios" => args.list_scenarios = true,
            "--help" | "-h" => return Err(USAGE.to_string()),
            other => return Err(format!("unknown argument '{other}'\n\n{USAGE}")),
        }
    }
    Ok(args)
}

fn build_config(args: &Args) -> Result<RunConfig, String> {
    let text = match &args.config_path {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config '{path}': {e}"))?,
        None => String::new(),
    };
    let mut cfg = parse_config_with_scenario(&text, args.scenario.as_deref())
        .map_err(|e| e.to_string())?;
    if let Some(dir) = &args.output {
        cfg.output.dir = dir.clone();
    }
    if let Some(n) = args.steps {
        cfg.steps = Some(n);
    }
    if let Some(eps) = args.epsilon {
        cfg.material.epsilon = eps;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(1);
        }
    };
    if args.list_scenarios {
        for name in builtin_scenarios() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg) {
        Ok(summary) => {
            println!(
                "{}: {} steps to t = {:.6}, max divergence {:.3e}, output in {}",
                cfg.scenario,
                summary.steps,
                summary.final_t,
                summary.max_div_residual_inf,
                cfg.output.dir
            );
            ExitCode::SUCCESS
        }
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
