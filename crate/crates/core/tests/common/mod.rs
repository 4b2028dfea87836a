#![allow(dead_code)]

use ddtrack_core::behavioral::DEFAULT_RANK_TOL;
use ddtrack_core::*;
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Setup {
    pub plant: LtiSystemF64,
    pub part: HankelPartitionF64,
    pub u_ini: DVector<f64>,
    pub y_true: DVector<f64>,
    pub y_ini: DVector<f64>,
    pub noise: NoiseModelF64,
    pub param: NoiseParameterizationF64,
    pub pred: OutputPredictorF64,
    pub prob: TrackingProblemF64,
}

/// Reference plant with T_d = 100, T_ini = 4, T_e = 20 and an energy bound at
/// `epsilon`. The recent window continues the historical run; when `noisy`,
/// `w_eps` sets the bound the injected noise is drawn from.
pub fn reference_setup(epsilon: f64, w_eps: Option<f64>, seed: u64) -> Setup {
    let plant = reference_plant::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (hist, x_end) = plant.generate_run(100, 1.0, &mut rng).unwrap();
    let u = DMatrix::from_fn(1, 4, |_, _| rng.random_range(-1.0..=1.0));
    let y = plant.simulate(&x_end, &u).unwrap();
    let u_ini = DVector::from_column_slice(u.as_slice());
    let y_true = DVector::from_column_slice(y.as_slice());
    let mut y_ini = y_true.clone();
    if let Some(w_eps) = w_eps {
        let bound = NoiseModel::energy_bound(w_eps, 4, 1).unwrap();
        y_ini += bound.ellipsoid().unwrap().sample(&mut rng).unwrap();
    }
    let noise = NoiseModel::energy_bound(epsilon, 4, 1).unwrap();
    let part = partition(&hist, 4, 20, Some(27), DEFAULT_RANK_TOL).unwrap();
    let param = build_parameterization(&part, &u_ini, &y_ini, &noise).unwrap();
    let pred = build_predictor(&part, &select_rows(&part).unwrap(), &param).unwrap();
    let prob = TrackingProblem::regulation(DMatrix::identity(1, 1), DMatrix::identity(1, 1), 20).unwrap();
    Setup { plant, part, u_ini, y_true, y_ini, noise, param, pred, prob }
}

pub fn noisy_reference(seed: u64) -> Setup {
    reference_setup(0.001, Some(0.001), seed)
}

pub fn random_vector(len: usize, scale: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| scale * rng.random_range(-1.0..=1.0))
}
