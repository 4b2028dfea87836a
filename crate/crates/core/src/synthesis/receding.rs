//! Receding-horizon loop: re-solve the robust tracking problem at every step
//! from the latest noisy window and apply only the first input.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::behavioral::{partition, DEFAULT_RANK_TOL};
use crate::error::Result;
use crate::noise::{build_parameterization, uniform_in_ball, NoiseModel};
use crate::plant::LtiSystem;
use crate::predictor::{build_predictor, select_rows, TrackingProblem};
use crate::synthesis::{synthesize, SynthesisOptions};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct RecedingHorizonConfig<T: Scalar> {
    pub t_d: usize,
    pub t_ini: usize,
    pub t_e: usize,
    /// Per-sample noise energy level; the window bound is `wᵀw ≤ T_ini·p·ε`.
    pub epsilon: T,
    pub problem: TrackingProblem<T>,
    /// Radius of the injected per-step noise relative to `√(p·ε)`, in `[0, 1]`.
    pub noise_fraction: T,
    pub amplitude: T,
    pub options: SynthesisOptions,
}

/// Closed-loop history. Column `k` of `states` is the state before input `k`;
/// `outputs` are noise-free, `measured` include the injected noise.
#[derive(Debug, Clone)]
pub struct RecedingLog<T: Scalar> {
    /// Random warm-up window preceding the first closed-loop step.
    pub warmup_inputs: DMatrix<T>,
    pub warmup_measured: DMatrix<T>,
    pub states: DMatrix<T>,
    pub inputs: DMatrix<T>,
    pub outputs: DMatrix<T>,
    pub measured: DMatrix<T>,
    pub gammas: Vec<T>,
    /// Set when a step did not return an optimal design; the log stops there.
    pub aborted: Option<String>,
}

impl<T: Scalar> RecedingLog<T> {
    pub fn steps(&self) -> usize {
        self.gammas.len()
    }
}

fn window<T: Scalar>(seq: &[DVector<T>]) -> DVector<T> {
    let refs: Vec<&DVector<T>> = seq.iter().collect();
    crate::linalg::vcat(&refs)
}

fn columns<T: Scalar>(rows: usize, cols: &[DVector<T>]) -> DMatrix<T> {
    let mut m = DMatrix::zeros(rows, cols.len());
    for (k, c) in cols.iter().enumerate() {
        m.set_column(k, c);
    }
    m
}

/// Runs `steps` closed-loop iterations after a `T_ini`-step random warm-up.
/// The logged sequences cover only the closed-loop part.
pub fn run_receding_horizon<T: Scalar>(
    plant: &LtiSystem<T>,
    config: &RecedingHorizonConfig<T>,
    steps: usize,
    seed: u64,
) -> Result<RecedingLog<T>> {
    let (n, m, p) = (plant.state_dim(), plant.input_dim(), plant.output_dim());
    let data = plant.generate_historical(config.t_d, config.amplitude, seed)?;
    let part = partition(
        &data,
        config.t_ini,
        config.t_e,
        Some(config.t_ini + config.t_e + n),
        T::lit(DEFAULT_RANK_TOL),
    )?;
    let selection = select_rows(&part)?;
    let noise = NoiseModel::energy_bound(config.epsilon, config.t_ini, p)?;
    let radius = (T::lit(p as f64) * config.epsilon).sqrt() * config.noise_fraction;

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut x = DVector::from_fn(n, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
    let step_plant = |x: &mut DVector<T>, u: &DVector<T>, rng: &mut ChaCha8Rng| {
        let y = plant.c() * &*x + plant.d() * u;
        let w: DVector<T> = uniform_in_ball(p, rng) * radius;
        *x = plant.a() * &*x + plant.b() * u;
        (y.clone(), y + w)
    };

    let mut u_hist = Vec::new();
    let mut y_meas_hist = Vec::new();
    for _ in 0..config.t_ini {
        let u = DVector::from_fn(m, |_, _| {
            T::lit(rng.random_range(-1.0..=1.0)) * config.amplitude
        });
        let (_, ym) = step_plant(&mut x, &u, &mut rng);
        u_hist.push(u);
        y_meas_hist.push(ym);
    }

    let mut states = Vec::new();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut measured = Vec::new();
    let mut gammas = Vec::new();
    let mut aborted = None;
    for k in 0..steps {
        let start = u_hist.len() - config.t_ini;
        let u_ini = window(&u_hist[start..]);
        let y_ini = window(&y_meas_hist[start..]);
        let param = build_parameterization(&part, &u_ini, &y_ini, &noise)?;
        let pred = build_predictor(&part, &selection, &param)?;
        let res = synthesize(&pred, &config.problem, &param, &config.options)?;
        if !res.is_optimal() {
            aborted = Some(format!("step {k}: {:?} ({})", res.status, res.detail));
            break;
        }
        let u = res.u_star.rows(0, m).into_owned();
        states.push(x.clone());
        let (y, ym) = step_plant(&mut x, &u, &mut rng);
        inputs.push(u.clone());
        outputs.push(y);
        measured.push(ym.clone());
        gammas.push(res.gamma_star);
        u_hist.push(u);
        y_meas_hist.push(ym);
    }

    Ok(RecedingLog {
        warmup_inputs: columns(m, &u_hist[..config.t_ini]),
        warmup_measured: columns(p, &y_meas_hist[..config.t_ini]),
        states: columns(n, &states),
        inputs: columns(m, &inputs),
        outputs: columns(p, &outputs),
        measured: columns(p, &measured),
        gammas,
        aborted,
    })
}
