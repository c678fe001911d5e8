mod args;
mod stages;

use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use capg_core::io::write_json;
use clap::Parser;

use args::{Cli, Command};

const THREADS_VAR: &str = "CAPG_THREADS";

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Synth(_) => "synth",
        Command::TrainSim(_) => "train-sim",
        Command::GenCam(_) => "gen-cam",
        Command::MineVocab(_) => "mine-vocab",
        Command::ScoreBoxes(_) => "score-boxes",
        Command::SelectPgt(_) => "select-pgt",
        Command::TrainMil(_) => "train-mil",
        Command::Detect(_) => "detect",
        Command::Evaluate(_) => "evaluate",
    }
}

fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let seed = cli.seed;
    let mut out = match &cli.command {
        Command::Synth(a) => stages::synth(a, seed),
        Command::TrainSim(a) => stages::train_sim(a, seed),
        Command::GenCam(a) => stages::gen_cam(a, seed),
        Command::MineVocab(a) => stages::mine_vocab(a, seed),
        Command::ScoreBoxes(a) => stages::score_boxes(a, seed),
        Command::SelectPgt(a) => stages::select_pgt(a, seed),
        Command::TrainMil(a) => stages::train_mil_stage(a, seed),
        Command::Detect(a) => stages::detect_stage(a, seed),
        Command::Evaluate(a) => stages::evaluate_stage(a, seed),
    }?;
    out.manifest
        .timings_ms
        .insert("total".into(), started.elapsed().as_secs_f64() * 1e3);
    let path = out
        .manifest_dir
        .join(format!("{}.manifest.json", command_name(&cli.command)));
    write_json(&path, &out.manifest).context("writing run manifest")?;

    if cli.json {
        println!("{}", serde_json::to_string(&out.summary)?);
    } else if let Some(fields) = out.summary.as_object() {
        for (k, v) in fields {
            println!("{k}: {v}");
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
