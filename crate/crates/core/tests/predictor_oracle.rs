mod common;

use common::{noisy_reference, random_vector};
use ddtrack_core::behavioral::DEFAULT_RANK_TOL;
use ddtrack_core::linalg;
use ddtrack_core::*;
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn reference_selection_keeps_state_dimension_rows() {
    let s = noisy_reference(1);
    assert_eq!(linalg::numerical_rank(&s.part.past_and_future_inputs(), DEFAULT_RANK_TOL), 27);
    let sel = select_rows(&s.part).unwrap();
    assert_eq!(sel.selected.len(), 3);
    assert_eq!(sel.dropped(4).len(), 1);
    assert_eq!(sel.lambda.nrows(), 27);
    assert_eq!(s.pred.selected_rows, sel.selected);
}

#[test]
fn full_rank_stack_keeps_every_row() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sys = LtiSystemF64::random_minimal(5, 1, 1, false, &mut rng);
    let (data, _) = sys.generate_run(60, 1.0, &mut rng).unwrap();
    let part = partition(&data, 2, 3, None, DEFAULT_RANK_TOL).unwrap();
    let sel = select_rows(&part).unwrap();
    assert_eq!(sel.selected, vec![0, 1]);
}

#[test]
fn duplicated_input_rows_are_dropped() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = DMatrix::from_fn(1, 60, |_, _| rng.random_range(-1.0..=1.0));
    let data = TrajectoryDataF64::new(u.clone(), u).unwrap();
    let part = partition(&data, 3, 5, None, DEFAULT_RANK_TOL).unwrap();
    let sel = select_rows(&part).unwrap();
    assert!(sel.selected.is_empty());
    assert_eq!(sel.lambda.nrows(), 8);
}

#[test]
fn free_response_matches_data_driven_simulation() {
    let s = noisy_reference(5);
    let zero_u = DVector::zeros(20);
    let y = s.pred.predict(&zero_u, &DVector::zeros(s.pred.n_w())).unwrap();
    assert_eq!(y, s.pred.y0);
    let oracle = simulate_ddriven(&s.part, &s.u_ini, &(&s.y_ini - &s.param.w0), &zero_u, 1e-8).unwrap();
    assert!((y - oracle).amax() <= 1e-8);
}

#[test]
fn predictor_matches_data_driven_simulation() {
    let s = noisy_reference(6);
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let samples = s.param.sample_feasible_gw_with(20, &mut rng).unwrap();
    for g in samples {
        let u = random_vector(20, 1.0, &mut rng);
        let w = s.param.noise_from_gw(&g).unwrap();
        let oracle = simulate_ddriven(&s.part, &s.u_ini, &(&s.y_ini - w), &u, 1e-8).unwrap();
        let y = s.pred.predict(&u, &g).unwrap();
        assert!((y - oracle).amax() <= 1e-6);
    }
}

#[test]
fn prediction_is_affine_in_the_input() {
    let s = noisy_reference(7);
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let u = random_vector(20, 1.0, &mut rng);
    let g = random_vector(s.pred.n_w(), 1.0, &mut rng);
    let y0 = s.pred.predict(&DVector::zeros(20), &g).unwrap();
    let y1 = s.pred.predict(&u, &g).unwrap();
    let y2 = s.pred.predict(&(&u * 2.0), &g).unwrap();
    assert!((&y1 - &y0 - &s.pred.b_u * &u).amax() < 1e-10);
    assert!((&y2 - &y1 - (&y1 - &y0)).amax() < 1e-10);
}

#[test]
fn quadratic_form_equals_cost_gap() {
    let s = noisy_reference(8);
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    for _ in 0..100 {
        let u = random_vector(20, 1.0, &mut rng);
        let g = random_vector(s.pred.n_w(), 1.0, &mut rng);
        let gamma = rng.random_range(0.0..100.0);
        let qg = build_qg(&s.pred, &s.prob, &u, gamma);
        let v = linalg::vcat(&[&DVector::from_element(1, 1.0), &g]);
        let form = v.dot(&(&qg * &v));
        let cost = lqte(&s.prob, &u, &s.pred.predict(&u, &g).unwrap());
        assert!((form - (gamma - cost)).abs() <= 1e-8, "{form} vs {}", gamma - cost);
        assert_eq!(form >= 0.0, cost <= gamma);
    }
    let u = random_vector(20, 1.0, &mut rng);
    let qg = build_qg(&s.pred, &s.prob, &u, 3.0);
    let cost0 = lqte(&s.prob, &u, &s.pred.predict(&u, &DVector::zeros(s.pred.n_w())).unwrap());
    assert!((qg[(0, 0)] - (3.0 - cost0)).abs() < 1e-10);
    let n_w = s.pred.n_w();
    assert!(linalg::max_eigenvalue(&qg.view((1, 1), (n_w, n_w)).into_owned()) <= 1e-10);
}

#[test]
fn predictor_document_serializes() {
    let s = noisy_reference(9);
    let json = serde_json::to_value(s.pred.to_document()).unwrap();
    assert_eq!(json["selected_rows"].as_array().unwrap().len(), 3);
}
