mod common;

use common::{noisy_reference, random_vector, reference_setup};
use ddtrack_core::behavioral::DEFAULT_RANK_TOL;
use ddtrack_core::linalg;
use ddtrack_core::*;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_parameter_gives_the_offset() {
    let s = noisy_reference(1);
    let w = s.param.noise_from_gw(&DVector::zeros(s.param.n_w())).unwrap();
    assert_eq!(w, s.param.w0);
    let expected = &s.y_ini - &s.part.y_p * &s.param.g_w_star;
    assert!((&s.param.w0 - expected).amax() < 1e-12);
    assert!((&s.part.u_p * &s.param.g_w_star - &s.u_ini).amax() < 1e-10);
}

#[test]
fn exact_window_admits_zero_noise() {
    let s = reference_setup(0.001, None, 2);
    // least-squares g_w driving w = w0 − Y_p M g_w to zero
    let g = linalg::min_norm_solve(&s.param.y_p_m, &s.param.w0, DEFAULT_RANK_TOL);
    let w = s.param.noise_from_gw(&g).unwrap();
    assert!(w.norm() <= 1e-8, "‖w‖ = {:e}", w.norm());
    assert!(s.param.is_feasible_gw(&g, 1e-10));
}

#[test]
fn constant_term_equals_phi11_when_offset_vanishes() {
    let s = reference_setup(0.001, None, 3);
    let y_ini = &s.part.y_p * &s.param.g_w_star;
    let param = build_parameterization(&s.part, &s.u_ini, &y_ini, &s.noise).unwrap();
    assert!(param.w0.amax() < 1e-12);
    assert!((param.a_w[(0, 0)] - s.noise.phi11()).abs() < 1e-12);
}

#[test]
fn every_parameter_gives_a_consistent_window() {
    let s = noisy_reference(4);
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for _ in 0..50 {
        let g = random_vector(s.param.n_w(), 2.0, &mut rng);
        let w = s.param.noise_from_gw(&g).unwrap();
        assert!(is_trajectory(&s.part, &s.u_ini, &(&s.y_ini - &w), 1e-8));
        // constraint on g_w equals the noise bound on w
        let lhs = s.param.constraint_value(&g).unwrap();
        let rhs = s.noise.evaluate(&w);
        assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn kernel_directions_leave_noise_unchanged() {
    let s = noisy_reference(5);
    let kernel = linalg::kernel_basis(&s.param.y_p_m, DEFAULT_RANK_TOL);
    assert_eq!(kernel.ncols(), s.param.n_w() - s.param.reduced_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let g = random_vector(s.param.n_w(), 1.0, &mut rng);
    let d = &kernel * random_vector(kernel.ncols(), 5.0, &mut rng);
    let w1 = s.param.noise_from_gw(&g).unwrap();
    let w2 = s.param.noise_from_gw(&(&g + d)).unwrap();
    assert!((w1 - w2).amax() < 1e-10);
}

#[test]
fn feasibility_at_zero_matches_the_offset() {
    let s = noisy_reference(6);
    let at_zero = s.param.constraint_value(&DVector::zeros(s.param.n_w())).unwrap();
    assert!((at_zero - s.noise.evaluate(&s.param.w0)).abs() < 1e-12);
    assert_eq!(s.param.is_feasible_gw(&DVector::zeros(s.param.n_w()), 0.0), at_zero >= 0.0);
}

#[test]
fn boundary_points_and_far_points() {
    let s = noisy_reference(7);
    let set = &s.param.reduced_set;
    let r = s.param.reduced_dim();
    for k in 0..r {
        let mut e = DVector::zeros(r);
        e[k] = 1.0;
        let g = s.param.gw_from_reduced(&set.from_unit_ball(&e));
        assert!(s.param.constraint_value(&g).unwrap().abs() <= 1e-8);
    }
    let a22 = s.param.a_w.view((1, 1), (s.param.n_w(), s.param.n_w())).into_owned();
    let d = s.param.reduced_basis.column(0).into_owned();
    assert!(d.dot(&(&a22 * &d)) < 0.0);
    assert!(!s.param.is_feasible_gw(&(d * 1e3), 1e-8));
}

#[test]
fn samples_are_sound() {
    let s = noisy_reference(8);
    let samples = s.param.sample_feasible_gw(200, 80).unwrap();
    assert_eq!(samples.len(), 200);
    for g in &samples {
        assert!(s.param.is_feasible_gw(g, 1e-10));
        let w = s.param.noise_from_gw(g).unwrap();
        assert!(s.noise.evaluate(&w) >= -1e-8);
        assert!(is_trajectory(&s.part, &s.u_ini, &(&s.y_ini - &w), 1e-8));
    }
    assert!(s.param.sample_feasible_gw(0, 80).unwrap().is_empty());
    assert_eq!(s.param.sample_feasible_gw(5, 81).unwrap(), s.param.sample_feasible_gw(5, 81).unwrap());
}

#[test]
fn the_true_noise_is_admissible() {
    let s = noisy_reference(9);
    let w_true = &s.y_ini - &s.y_true;
    let g = linalg::min_norm_solve(&s.param.y_p_m, &(&s.param.w0 - &w_true), DEFAULT_RANK_TOL);
    assert!((s.param.noise_from_gw(&g).unwrap() - &w_true).amax() < 1e-8);
    assert!(s.param.is_feasible_gw(&g, 1e-10));
}

#[test]
fn inconsistent_window_gives_an_empty_set() {
    let s = reference_setup(1e-6, None, 10);
    let y_ini = &s.y_true + DVector::from_element(4, 0.5);
    let param = build_parameterization(&s.part, &s.u_ini, &y_ini, &s.noise).unwrap();
    assert!(param.is_empty());
    assert!(matches!(param.sample_feasible_gw(3, 1), Err(Error::Infeasible(_))));
}

#[test]
fn square_input_block_has_no_free_parameter() {
    let data = reference_plant::<f64>().generate_historical(27, 1.0, 11).unwrap();
    let part = partition(&data, 4, 20, None, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(part.columns(), 4);
    let noise = NoiseModel::energy_bound(0.001, 4, 1).unwrap();
    let err = build_parameterization(&part, &DVector::zeros(4), &DVector::zeros(4), &noise).unwrap_err();
    assert!(matches!(err, Error::DegenerateKernel));
}
