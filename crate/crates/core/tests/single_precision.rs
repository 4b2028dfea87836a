use ddtrack_core::*;
use nalgebra::{DMatrix, DVector};

#[test]
fn single_precision_pipeline() {
    let plant = reference_plant::<f32>();
    assert_eq!(plant.lag().unwrap(), 3);
    let data: TrajectoryDataF32 = plant.generate_historical(100, 1.0, 1).unwrap();
    let part = partition(&data, 4, 20, Some(27), 1e-5).unwrap();

    let x0 = DVector::from_vec(vec![0.5f32, -0.2, 0.1]);
    let u = DMatrix::from_fn(1, 24, |_, k| ((k as f32) * 0.7).sin());
    let y = plant.simulate(&x0, &u).unwrap();
    let u_ini = DVector::from_column_slice(&u.as_slice()[..4]);
    let y_ini = DVector::from_column_slice(&y.as_slice()[..4]);
    let u_f = DVector::from_column_slice(&u.as_slice()[4..]);
    let predicted = simulate_ddriven(&part, &u_ini, &y_ini, &u_f, 1e-3).unwrap();
    let err = (predicted - DVector::from_column_slice(&y.as_slice()[4..])).amax();
    assert!(err < 1e-2, "error {err}");

    let noise: NoiseModelF32 = NoiseModel::energy_bound(0.001, 4, 1).unwrap();
    let param = build_parameterization(&part, &u_ini, &y_ini, &noise).unwrap();
    let pred = build_predictor(&part, &select_rows(&part).unwrap(), &param).unwrap();
    let prob = TrackingProblem::regulation(DMatrix::identity(1, 1), DMatrix::identity(1, 1), 20).unwrap();
    let options = SynthesisOptions::with_backend(Backend::MultiplierSearch(MultiplierSearch::default()));
    let res: SynthesisResultF32 = synthesize(&pred, &prob, &param, &options).unwrap();
    assert!(res.gamma_star.is_finite() && res.gamma_star > 0.0);
    let wc = worst_case_cost(&pred, &prob, &param, &res.u_star).unwrap();
    assert!((wc.gamma_wc - res.gamma_star).abs() <= 1e-2 * res.gamma_star);
}
