mod args;
mod commands;
mod config;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command};
use commands::Ctx;
use config::{merge, CliError, CliResult, ConfigFile, DEFAULT_OUT, DEFAULT_SEED};

fn run(cli: Cli) -> CliResult<Value> {
    let started = Instant::now();
    let name = cli.command.name();
    let cfg = match &cli.global.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if let Some(s) = &cfg.subcommand {
        if s != name {
            return Err(CliError::Config(format!(
                "config `subcommand` is {s:?} but {name:?} was invoked"
            )));
        }
    }
    let seed = cli.global.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let threads = cli.global.threads.or(cfg.threads).unwrap_or(1);
    if threads == 0 {
        return Err(CliError::Config("`threads` must be at least 1".into()));
    }
    let out = cli
        .global
        .out
        .or(cfg.out)
        .unwrap_or_else(|| DEFAULT_OUT.into());
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut ctx = Ctx::new(seed, out);
    let p = &cfg.params;
    match cli.command {
        Command::Trace(a) => commands::trace(merge(&a, p)?, &mut ctx),
        Command::SleSample(a) => commands::sle_sample(merge(&a, p)?, &mut ctx),
        Command::SideHit(a) => commands::side_hit(merge(&a, p)?, &mut ctx),
        Command::RadialSurvival(a) => commands::radial_survival(merge(&a, p)?, &mut ctx),
        Command::Lerw(a) => commands::lerw(merge(&a, p)?, &mut ctx),
        Command::Ust(a) => commands::ust(merge(&a, p)?, &mut ctx),
        Command::Peano(a) => commands::peano(merge(&a, p)?, &mut ctx),
        Command::PercoCross(a) => commands::perco_cross(merge(&a, p)?, &mut ctx),
        Command::Cardy(a) => commands::cardy(merge(&a, p)?, &mut ctx),
        Command::Arms(a) => commands::arms(merge(&a, p)?, &mut ctx),
        Command::Wedge(a) => commands::wedge(merge(&a, p)?, &mut ctx),
        Command::Excursion(a) => commands::excursion(merge(&a, p)?, &mut ctx),
        Command::Disconnect(a) => commands::disconnect(merge(&a, p)?, &mut ctx),
        Command::Nonintersect(a) => commands::nonintersect(merge(&a, p)?, &mut ctx),
        Command::Exponents(a) => commands::exponents(merge(&a, p)?, &mut ctx),
        Command::Formulas(a) => commands::formulas_cmd(merge(&a, p)?, &mut ctx),
        Command::RemovalMap(a) => commands::removal_map(merge(&a, p)?, &mut ctx),
    }?;

    let mut summary = json!({
        "subcommand": name,
        "seed": seed,
        "threads": threads,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "artifact_paths": ctx.artifacts,
    });
    let m = summary.as_object_mut().expect("object");
    for (k, v) in ctx.result {
        m.entry(k).or_insert(v);
    }
    Ok(summary)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("slekit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
