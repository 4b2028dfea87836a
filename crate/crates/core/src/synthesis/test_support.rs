use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behavioral::{partition, DEFAULT_RANK_TOL};
use crate::noise::{build_parameterization, NoiseModel, NoiseParameterization};
use crate::plant::reference_plant;
use crate::predictor::{build_predictor, select_rows, OutputPredictor, TrackingProblem};

pub(crate) struct Design {
    pub pred: OutputPredictor<f64>,
    pub prob: TrackingProblem<f64>,
    pub param: NoiseParameterization<f64>,
}

/// Reference plant, T_ini = 4, T_e = 20, energy bound at `epsilon`, recent
/// window corrupted by a uniform draw from the bound when `noisy`.
pub(crate) fn reference_design(epsilon: f64, noisy: bool) -> Design {
    let plant = reference_plant::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (hist, x_end) = plant.generate_run(100, 1.0, &mut rng).unwrap();
    let u = DMatrix::from_fn(1, 4, |_, _| rng.random_range(-1.0..=1.0));
    let y = plant.simulate(&x_end, &u).unwrap();
    let noise = NoiseModel::energy_bound(epsilon, 4, 1).unwrap();
    let mut y_ini = DVector::from_column_slice(y.as_slice());
    if noisy {
        y_ini += noise.ellipsoid().unwrap().sample(&mut rng).unwrap();
    }
    let u_ini = DVector::from_column_slice(u.as_slice());
    let part = partition(&hist, 4, 20, Some(27), DEFAULT_RANK_TOL).unwrap();
    let param = build_parameterization(&part, &u_ini, &y_ini, &noise).unwrap();
    let pred = build_predictor(&part, &select_rows(&part).unwrap(), &param).unwrap();
    let prob = TrackingProblem::regulation(DMatrix::identity(1, 1), DMatrix::identity(1, 1), 20).unwrap();
    Design { pred, prob, param }
}
