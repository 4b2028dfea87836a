//! End-to-end experiment: historical data, a noisy recent window, the robust
//! design and its Monte-Carlo validation.

use std::fmt;

use ddtrack_core::behavioral::DEFAULT_RANK_TOL;
use ddtrack_core::io::vector_to_vec;
use ddtrack_core::synthesis::{RecedingHorizonConfig, SynthesisRecord};
use ddtrack_core::{
    build_parameterization, build_predictor, lqte, partition, select_rows, synthesize, worst_case_cost, Error,
    HankelPartitionF64, LtiSystemF64, NoiseModelF64, NoiseParameterizationF64, OutputPredictorF64,
    SynthesisResultF64, TrackingProblemF64, TrajectoryDataF64,
};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Data,
    Recent,
    Partition,
    Parameterization,
    Predictor,
    Synthesis,
    Validation,
    WorstCase,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Data => "historical data",
            Stage::Recent => "recent data",
            Stage::Partition => "hankel partition",
            Stage::Parameterization => "noise parameterization",
            Stage::Predictor => "predictor",
            Stage::Synthesis => "synthesis",
            Stage::Validation => "validation",
            Stage::WorstCase => "worst-case oracle",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct ExperimentError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl ExperimentError {
    /// 2 for infeasible problems, 3 for solver failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.source {
            Error::Infeasible(_) => 2,
            Error::Solver(_) | Error::Unbounded(_) => 3,
            _ => 1,
        }
    }
}

pub type StageResult<T> = std::result::Result<T, ExperimentError>;

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> StageResult<T>;
}

impl<T> AtStage<T> for ddtrack_core::Result<T> {
    fn at(self, stage: Stage) -> StageResult<T> {
        self.map_err(|source| ExperimentError { stage, source })
    }
}

/// Recent window: inputs, noise-free outputs and the injected noise.
#[derive(Debug, Clone)]
pub struct RecentWindow {
    pub u_ini: DVector<f64>,
    pub y_true: DVector<f64>,
    pub noise: DVector<f64>,
}

impl RecentWindow {
    pub fn y_ini(&self) -> DVector<f64> {
        &self.y_true + &self.noise
    }

    /// As a trajectory with the measured (noisy) outputs.
    pub fn measured(&self, m: usize, p: usize) -> ddtrack_core::Result<TrajectoryDataF64> {
        let t = self.u_ini.len() / m;
        TrajectoryDataF64::new(
            DMatrix::from_column_slice(m, t, self.u_ini.as_slice()),
            DMatrix::from_column_slice(p, t, self.y_ini().as_slice()),
        )
    }
}

/// Historical run plus the state reached at its end.
pub fn generate_historical(
    cfg: &ExperimentConfig,
    plant: &LtiSystemF64,
) -> StageResult<(TrajectoryDataF64, DVector<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds.data);
    plant.generate_run(cfg.t_d, cfg.input_amplitude, &mut rng).at(Stage::Data)
}

/// Continues the plant from `x_start` for `T_ini` steps with fresh uniform
/// inputs and corrupts the outputs with a uniform draw from the noise bound.
pub fn generate_recent(
    cfg: &ExperimentConfig,
    plant: &LtiSystemF64,
    x_start: &DVector<f64>,
) -> StageResult<RecentWindow> {
    let (m, p) = (plant.input_dim(), plant.output_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds.recent);
    let amp = cfg.input_amplitude;
    let u = DMatrix::from_fn(m, cfg.t_ini, |_, _| rng.random_range(-amp..=amp));
    let y = plant.simulate(x_start, &u).at(Stage::Recent)?;
    let bound = NoiseModelF64::energy_bound(cfg.injected_bound(), cfg.t_ini, p).at(Stage::Recent)?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seeds.noise);
    let noise = bound
        .ellipsoid()
        .and_then(|e| e.sample(&mut noise_rng))
        .at(Stage::Recent)?;
    Ok(RecentWindow {
        u_ini: DVector::from_column_slice(u.as_slice()),
        y_true: DVector::from_column_slice(y.as_slice()),
        noise,
    })
}

/// Everything the controller builds from data for one recent window.
#[derive(Debug, Clone)]
pub struct Design {
    pub part: HankelPartitionF64,
    pub noise: NoiseModelF64,
    pub param: NoiseParameterizationF64,
    pub pred: OutputPredictorF64,
    pub prob: TrackingProblemF64,
}

pub fn build_design(
    cfg: &ExperimentConfig,
    plant: &LtiSystemF64,
    hist: &TrajectoryDataF64,
    u_ini: &DVector<f64>,
    y_ini: &DVector<f64>,
) -> StageResult<Design> {
    let (n, p) = (plant.state_dim(), plant.output_dim());
    let part = partition(hist, cfg.t_ini, cfg.t_e, Some(cfg.t_ini + cfg.t_e + n), DEFAULT_RANK_TOL)
        .at(Stage::Partition)?;
    let noise = NoiseModelF64::energy_bound(cfg.epsilon, cfg.t_ini, p).at(Stage::Parameterization)?;
    let param = build_parameterization(&part, u_ini, y_ini, &noise).at(Stage::Parameterization)?;
    let selection = select_rows(&part).at(Stage::Predictor)?;
    let pred = build_predictor(&part, &selection, &param).at(Stage::Predictor)?;
    let prob = cfg.problem(p).at(Stage::Config)?;
    Ok(Design { part, noise, param, pred, prob })
}

pub fn solve(cfg: &ExperimentConfig, design: &Design) -> StageResult<SynthesisResultF64> {
    synthesize(&design.pred, &design.prob, &design.param, &cfg.solver.options()).at(Stage::Synthesis)
}

/// Realized costs and outputs of `u` under sampled admissible noise.
#[derive(Debug, Clone, Default)]
pub struct Validation {
    pub costs: Vec<f64>,
    /// One `p·T_e` output vector per realization.
    pub outputs: Vec<DVector<f64>>,
}

pub fn validate_design(design: &Design, u: &DVector<f64>, count: usize, seed: u64) -> StageResult<Validation> {
    if count == 0 {
        return Ok(Validation::default());
    }
    let samples = design.param.sample_feasible_gw(count, seed).at(Stage::Validation)?;
    let mut out = Validation::default();
    for g in &samples {
        let y = design.pred.predict(u, g).at(Stage::Validation)?;
        out.costs.push(lqte(&design.prob, u, &y));
        out.outputs.push(y);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseRecord {
    pub gamma_wc: f64,
    /// Noise on the recent window that attains `gamma_wc`.
    pub noise: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub max_cost: Option<f64>,
    pub all_costs_below_gamma: bool,
    /// `gamma_wc / gamma_star`.
    pub worst_case_ratio: Option<f64>,
    /// Largest `max_{k ≥ tail_start} |y_k| / max_k |y_k|` over the realizations.
    pub tail_ratio: Option<f64>,
    pub tail_start: usize,
    /// `max cost ≤ γ_wc ≤ γ*·(1 + 1e-6)`.
    pub consistent: bool,
}

/// Scalars and provenance of one experiment; `outputs` is written to CSV only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub synthesis: SynthesisRecord,
    pub n_w: usize,
    pub reduced_dim: usize,
    pub selected_rows: Vec<usize>,
    pub u_ini: Vec<f64>,
    pub y_ini: Vec<f64>,
    pub injected_noise: Vec<f64>,
    pub worst_case: Option<WorstCaseRecord>,
    pub costs: Vec<f64>,
    pub checks: Checks,
    pub output_dim: usize,
    #[serde(skip)]
    pub outputs: Vec<Vec<f64>>,
}

/// Tail steps used by the regulation check: the last quarter of the horizon.
pub fn tail_start(t_e: usize) -> usize {
    t_e - t_e / 4
}

fn tail_ratio(y: &DVector<f64>, p: usize, start: usize) -> f64 {
    let peak = y.amax();
    if peak == 0.0 {
        return 0.0;
    }
    y.rows(p * start, y.len() - p * start).amax() / peak
}

pub fn receding_config(cfg: &ExperimentConfig, p: usize) -> StageResult<RecedingHorizonConfig<f64>> {
    Ok(RecedingHorizonConfig {
        t_d: cfg.t_d,
        t_ini: cfg.t_ini,
        t_e: cfg.t_e,
        epsilon: cfg.epsilon,
        problem: cfg.problem(p).at(Stage::Config)?,
        noise_fraction: cfg.rhc_noise_fraction,
        amplitude: cfg.input_amplitude,
        options: cfg.solver.options(),
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> StageResult<ExperimentReport> {
    let plant = cfg.plant().at(Stage::Config)?;
    cfg.validate(&plant).at(Stage::Config)?;
    let p = plant.output_dim();

    let (hist, x_end) = generate_historical(cfg, &plant)?;
    let recent = generate_recent(cfg, &plant, &x_end)?;
    let y_ini = recent.y_ini();
    let design = build_design(cfg, &plant, &hist, &recent.u_ini, &y_ini)?;
    let result = solve(cfg, &design)?.into_optimal().at(Stage::Synthesis)?;
    log::info!("γ* = {} ({}, {:.3}s)", result.gamma_star, result.backend, result.solve_time);

    let validation = validate_design(&design, &result.u_star, cfg.n_samples, cfg.seeds.validation)?;
    let wc = worst_case_cost(&design.pred, &design.prob, &design.param, &result.u_star).at(Stage::WorstCase)?;
    let wc_noise = design.param.noise_from_gw(&wc.g_w).at(Stage::WorstCase)?;

    let gamma = result.gamma_star;
    let start = tail_start(cfg.t_e);
    let max_cost = validation.costs.iter().copied().reduce(f64::max);
    let checks = Checks {
        max_cost,
        all_costs_below_gamma: validation.costs.iter().all(|&c| c <= gamma * (1.0 + 1e-6)),
        worst_case_ratio: (gamma > 0.0).then(|| wc.gamma_wc / gamma),
        tail_ratio: validation.outputs.iter().map(|y| tail_ratio(y, p, start)).reduce(f64::max),
        tail_start: start,
        consistent: max_cost.is_none_or(|c| c <= wc.gamma_wc * (1.0 + 1e-9) + 1e-12)
            && wc.gamma_wc <= gamma * (1.0 + 1e-6),
    };
    Ok(ExperimentReport {
        config: cfg.clone(),
        synthesis: result.to_record(),
        n_w: design.param.n_w(),
        reduced_dim: design.param.reduced_dim(),
        selected_rows: design.pred.selected_rows.clone(),
        u_ini: vector_to_vec(&recent.u_ini),
        y_ini: vector_to_vec(&y_ini),
        injected_noise: vector_to_vec(&recent.noise),
        worst_case: Some(WorstCaseRecord { gamma_wc: wc.gamma_wc, noise: vector_to_vec(&wc_noise) }),
        costs: validation.costs,
        checks,
        output_dim: p,
        outputs: validation.outputs.iter().map(vector_to_vec).collect(),
    })
}
