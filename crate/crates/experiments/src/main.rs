use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddtrack::config::ExperimentConfig;
use ddtrack::output::{self, COSTS_FILE, RHC_FILE};
use ddtrack::pipeline::{self, AtStage, ExperimentError, Stage, StageResult};
use ddtrack_core::io::{load_trajectory_csv, save_trajectory_csv, window_to_vector};
use ddtrack_core::synthesis::{run_receding_horizon, SynthesisRecord};
use ddtrack_core::{Error, SynthesisResultF64};

#[derive(Parser, Debug)]
#[command(name = "ddtrack", version, about = "Robust data-driven tracking experiments")]
struct Cli {
    /// Experiment configuration (JSON); the reference experiment when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override, e.g. `--seed noise=7`. Repeatable.
    #[arg(long = "seed", value_name = "NAME=INT", global = true)]
    seeds: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the historical run and the noisy recent window.
    Generate,
    /// Solve the robust design from saved data.
    Synthesize {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        recent: Option<PathBuf>,
    },
    /// Evaluate a saved design on sampled admissible noise.
    Validate {
        #[arg(long)]
        result: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        recent: Option<PathBuf>,
    },
    /// Full pipeline: data, design, validation, report and plots.
    Run,
    /// Closed-loop receding-horizon simulation.
    Rhc {
        #[arg(long, default_value_t = 30)]
        steps: usize,
    },
}

const DATA_FILE: &str = "data.csv";
const RECENT_FILE: &str = "recent.csv";
const RESULT_FILE: &str = "result.json";

fn load_config(cli: &Cli) -> StageResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_json_file(path).at(Stage::Config)?,
        None => ExperimentConfig::reference(),
    };
    for item in &cli.seeds {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("seed override `{item}` is not NAME=INT")))
            .at(Stage::Config)?;
        let value: u64 = value
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("seed `{name}`: {e}")))
            .at(Stage::Config)?;
        cfg.seeds.set(name.trim(), value).at(Stage::Config)?;
    }
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> StageResult<()> {
    std::fs::create_dir_all(dir).map_err(Error::from).at(Stage::Output)
}

fn write_json<S: serde::Serialize>(value: &S, path: &Path) -> StageResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from).at(Stage::Output)?;
    std::fs::write(path, text + "\n").map_err(Error::from).at(Stage::Output)
}

/// Design rebuilt from saved historical and recent data.
fn saved_design(
    cfg: &ExperimentConfig,
    data: &Path,
    recent: &Path,
) -> StageResult<pipeline::Design> {
    let plant = cfg.plant().at(Stage::Config)?;
    cfg.validate(&plant).at(Stage::Config)?;
    let hist = load_trajectory_csv(data).at(Stage::Data)?;
    let win = load_trajectory_csv::<f64>(recent).at(Stage::Recent)?;
    if win.len() != cfg.t_ini {
        return Err(Error::Dimension(format!("recent window has {} steps, expected T_ini = {}", win.len(), cfg.t_ini)))
            .at(Stage::Recent);
    }
    pipeline::build_design(
        cfg,
        &plant,
        &hist,
        &window_to_vector(win.inputs()),
        &window_to_vector(win.outputs()),
    )
}

fn execute(cli: &Cli) -> StageResult<()> {
    let cfg = load_config(cli)?;
    let out = &cli.out;
    prepare_out(out)?;
    let or_default = |p: &Option<PathBuf>, name: &str| p.clone().unwrap_or_else(|| out.join(name));
    match &cli.command {
        Command::Generate => {
            let plant = cfg.plant().at(Stage::Config)?;
            cfg.validate(&plant).at(Stage::Config)?;
            let (hist, x_end) = pipeline::generate_historical(&cfg, &plant)?;
            let recent = pipeline::generate_recent(&cfg, &plant, &x_end)?;
            let measured = recent.measured(plant.input_dim(), plant.output_dim()).at(Stage::Recent)?;
            save_trajectory_csv(&hist, out.join(DATA_FILE)).at(Stage::Output)?;
            save_trajectory_csv(&measured, out.join(RECENT_FILE)).at(Stage::Output)?;
            println!("wrote {} and {}", out.join(DATA_FILE).display(), out.join(RECENT_FILE).display());
        }
        Command::Synthesize { data, recent } => {
            let design = saved_design(&cfg, &or_default(data, DATA_FILE), &or_default(recent, RECENT_FILE))?;
            let result = pipeline::solve(&cfg, &design)?;
            write_json(&result.to_record(), &out.join(RESULT_FILE))?;
            let result = result.into_optimal().at(Stage::Synthesis)?;
            println!("gamma* = {}", result.gamma_star);
        }
        Command::Validate { result, data, recent } => {
            let design = saved_design(&cfg, &or_default(data, DATA_FILE), &or_default(recent, RECENT_FILE))?;
            let path = or_default(result, RESULT_FILE);
            let text = std::fs::read_to_string(&path).map_err(Error::from).at(Stage::Validation)?;
            let record: SynthesisRecord = serde_json::from_str(&text).map_err(Error::from).at(Stage::Validation)?;
            let result: SynthesisResultF64 = record.into_result().into_optimal().at(Stage::Validation)?;
            if result.u_star.len() != design.pred.b_u.ncols() {
                return Err(Error::Dimension("saved input does not match the horizon".into())).at(Stage::Validation);
            }
            let v = pipeline::validate_design(&design, &result.u_star, cfg.n_samples, cfg.seeds.validation)?;
            output::write_costs_csv(&v.costs, result.gamma_star, &out.join(COSTS_FILE)).at(Stage::Output)?;
            let max = v.costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            println!("{} realizations, max cost {max}, gamma* {}", v.costs.len(), result.gamma_star);
        }
        Command::Run => {
            let report = pipeline::run_experiment(&cfg)?;
            output::write_report(&report, out).at(Stage::Output)?;
            output::emit_plots(&report, out).at(Stage::Output)?;
            println!("gamma* = {}", report.synthesis.gamma_star);
            if let Some(wc) = &report.worst_case {
                println!("worst-case cost = {}", wc.gamma_wc);
            }
            if let Some(max) = report.checks.max_cost {
                println!("max realized cost = {max} over {} realizations", report.costs.len());
            }
        }
        Command::Rhc { steps } => {
            let plant = cfg.plant().at(Stage::Config)?;
            cfg.validate(&plant).at(Stage::Config)?;
            let rh = pipeline::receding_config(&cfg, plant.output_dim())?;
            let log = run_receding_horizon(&plant, &rh, *steps, cfg.seeds.data).at(Stage::Synthesis)?;
            output::write_receding_csv(&log, &out.join(RHC_FILE)).at(Stage::Output)?;
            println!("{} closed-loop steps written to {}", log.steps(), out.join(RHC_FILE).display());
            if let Some(reason) = log.aborted {
                // the partial log is kept; the status still reports the failure
                return Err(Error::Solver(reason)).at(Stage::Synthesis);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            report_exit(&err)
        }
    }
}

fn report_exit(err: &ExperimentError) -> ExitCode {
    ExitCode::from(err.exit_code() as u8)
}
