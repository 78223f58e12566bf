use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aos_swarm::harness::batch::{self, BatchConfig};
use aos_swarm::harness::export::export_run;
use aos_swarm::harness::{run_experiment, ExperimentConfig};
use aos_swarm::scene::{generate_forest, ForestConfig, Scene};
use aos_swarm::stepper::Variant;
use aos_swarm::Error;
use clap::{Parser, Subcommand};
use rayon::prelude::*;

const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "aos-swarm",
    version,
    about = "Drone-swarm sampling experiments over occluded targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fly one variant over one scene and write its run files.
    Run(RunArgs),
    /// Run every variant on every initialization and write the aggregates.
    Batch(BatchArgs),
    /// Recompute mean curves, histograms and the comparison table of a batch.
    Analyze {
        /// Batch output directory.
        dir: PathBuf,
    },
    /// Generate or inspect a forest scene.
    #[command(subcommand)]
    Scene(SceneCommand),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML); defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Swarm seed, also used as scene seed unless --scene-seed is given.
    #[arg(long, value_parser = seed_parser())]
    seed: u64,
    #[arg(long)]
    variant: Variant,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = seed_parser())]
    scene_seed: Option<u64>,
    /// Load the scene from a JSON file.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    time_limit: Option<f64>,
    /// Drone speed (m/s).
    #[arg(long)]
    speed: Option<f64>,
    /// Override any config key, e.g. `--set params.c4=4.0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(clap::Args)]
struct BatchArgs {
    /// Batch config (TOML); defaults to 4 variants × 3 initializations.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    speed: Option<f64>,
    /// Run one experiment at a time.
    #[arg(long)]
    sequential: bool,
    /// Override any batch config key, e.g. `--set base.params.n=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum SceneCommand {
    /// Write a generated forest as JSON.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Experiment config whose `forest` table is used.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Summarize a scene file.
    Inspect { scene: PathBuf },
}

fn fail(code: u8, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parse `value` as a TOML value, falling back to a plain string.
fn parse_value(value: &str) -> toml::Value {
    format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

fn set_key(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), String> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or("empty key")?;
    let mut cur = table;
    for part in parts {
        let entry = cur
            .entry(part)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| format!("`{part}` is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Config text with `KEY=VALUE` overrides applied.
fn with_overrides(
    path: Option<&Path>,
    overrides: &[(String, toml::Value)],
) -> Result<String, Error> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?,
        None => String::new(),
    };
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    for (k, v) in overrides {
        set_key(&mut table, k, v.clone()).map_err(|e| Error::Config(format!("--set {k}: {e}")))?;
    }
    Ok(table.to_string())
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, toml::Value)>, String> {
    raw.iter()
        .map(|s| {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            Ok((k.trim().to_string(), parse_value(v.trim())))
        })
        .collect()
}

fn run(args: RunArgs) -> ExitCode {
    let mut overrides = match parse_overrides(&args.overrides) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    overrides.push((
        "variant".into(),
        toml::Value::String(args.variant.name().into()),
    ));
    overrides.push(("rng_seed".into(), seed_value(args.seed)));
    overrides.push((
        "scene_seed".into(),
        seed_value(args.scene_seed.unwrap_or(args.seed)),
    ));
    if let Some(t) = args.time_limit {
        overrides.push(("time_limit".into(), toml::Value::Float(t)));
    }
    if let Some(s) = args.speed {
        overrides.push(("params.drone_speed".into(), toml::Value::Float(s)));
    }
    if let Some(scene) = &args.scene {
        overrides.push((
            "scene_file".into(),
            toml::Value::String(scene.display().to_string()),
        ));
    }
    overrides.push((
        "out".into(),
        toml::Value::String(args.out.display().to_string()),
    ));

    let result = with_overrides(args.config.as_deref(), &overrides)
        .and_then(|text| ExperimentConfig::from_toml(&text))
        .and_then(|config| {
            let record = run_experiment(&config)?;
            export_run(&record, Some(&config), &args.out)?;
            Ok(record)
        });
    match result {
        Ok(record) => {
            let last = record.rows.last().map_or(0.0, |r| r.sim_time);
            println!(
                "{}: {} steps, {:.2} s simulated, best visibility {:.4} -> {}",
                record.variant,
                record.rows.len(),
                last,
                record.best_visibility(),
                args.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(exit_code(&e), e),
    }
}

/// Seeds travel through TOML integers, which are signed.
fn seed_parser() -> impl clap::builder::TypedValueParser<Value = u64> {
    clap::value_parser!(u64).range(..=i64::MAX as u64)
}

fn seed_value(seed: u64) -> toml::Value {
    toml::Value::Integer(seed as i64)
}

fn batch(args: BatchArgs) -> ExitCode {
    let mut overrides = match parse_overrides(&args.overrides) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    if let Some(t) = args.time_limit {
        overrides.push(("base.time_limit".into(), toml::Value::Float(t)));
    }
    if let Some(s) = args.speed {
        overrides.push(("base.params.drone_speed".into(), toml::Value::Float(s)));
    }
    let config = match with_overrides(args.config.as_deref(), &overrides)
        .and_then(|text| BatchConfig::from_toml(&text))
    {
        Ok(c) => c,
        Err(e) => return fail(exit_code(&e), e),
    };
    let plan = config.plan();
    let fly = |run: &batch::BatchRun| run_experiment(&run.config).map(|r| (run.clone(), r));
    let records: Result<Vec<_>, Error> = if args.sequential {
        plan.iter().map(fly).collect()
    } else {
        plan.par_iter().map(fly).collect()
    };
    let summary = match records.and_then(|runs| batch::write_batch(&args.out, &config, &runs)) {
        Ok(s) => s,
        Err(e) => return fail(exit_code(&e), e),
    };
    print_summary(&summary);
    ExitCode::SUCCESS
}

fn print_summary(summary: &batch::BatchSummary) {
    for v in &summary.variants {
        let best: Vec<String> = v
            .records
            .iter()
            .map(|r| format!("{:.4}", r.best_visibility()))
            .collect();
        println!(
            "{:20} runs {}  best visibility [{}]  leader-following steps {}",
            v.variant.name(),
            v.records.len(),
            best.join(", "),
            v.histogram.total()
        );
    }
}

fn scene(cmd: SceneCommand) -> ExitCode {
    match cmd {
        SceneCommand::Generate { seed, out, config } => {
            let forest = match config {
                Some(p) => ExperimentConfig::load(p).map(|c| c.forest),
                None => Ok(ForestConfig::default()),
            };
            match forest
                .and_then(|f| generate_forest(seed, &f))
                .and_then(|s| {
                    s.save(&out)?;
                    Ok(s)
                }) {
                Ok(s) => {
                    println!("{} occluders -> {}", s.occluders.len(), out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(exit_code(&e), e),
            }
        }
        SceneCommand::Inspect { scene } => match Scene::load(&scene) {
            Ok(s) => {
                let t = s.target.center;
                let fp = &s.target.footprint;
                let above =
                    fp.iter().map(|&p| s.transmittance(p, p)).sum::<f64>() / fp.len().max(1) as f64;
                println!("extent        {} x {} m", s.extent.x, s.extent.y);
                println!("occluders     {}", s.occluders.len());
                println!("target        ({}, {})", t.x, t.y);
                println!(
                    "footprint     {} points, mean transmittance from above {:.3}",
                    fp.len(),
                    above
                );
                println!(
                    "altitude      {} m, canopy at {} m",
                    s.altitude, s.canopy_height
                );
                println!("view radius   {:.2} m", s.view_radius());
                ExitCode::SUCCESS
            }
            Err(e) => fail(exit_code(&e), e),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run(args) => run(args),
        Command::Batch(args) => batch(args),
        Command::Analyze { dir } => match batch::analyze(&dir) {
            Ok(summary) => {
                print_summary(&summary);
                ExitCode::SUCCESS
            }
            Err(e) => fail(exit_code(&e), e),
        },
        Command::Scene(cmd) => scene(cmd),
    }
}
