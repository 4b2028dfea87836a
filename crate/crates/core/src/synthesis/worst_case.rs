//! Exact inner maximization: the largest tracking cost any admissible noise
//! can produce for a fixed input.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg;
use crate::noise::NoiseParameterization;
use crate::predictor::{lqte, OutputPredictor, TrackingProblem};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct WorstCase<T: Scalar> {
    pub gamma_wc: T,
    pub g_w: DVector<T>,
}

/// Maximizes `vᵀGv + 2gᵀv` over `‖v‖ ≤ 1` for symmetric `G ⪰ 0`.
///
/// Global maximizers satisfy `(μI − G)v = g` with `μ ≥ λ_max(G)` and
/// `‖v‖ = 1` (the objective is convex, so the boundary is always active).
/// `μ` solves the secular equation `Σ β_i² / (μ − λ_i)² = 1`; when the
/// gradient has no component along the top eigenspace and the remaining
/// step is short, `μ = λ_max` and the step is completed along that
/// eigenspace.
pub fn maximize_on_unit_ball<T: Scalar>(g_mat: &DMatrix<T>, g_vec: &DVector<T>) -> (DVector<T>, T) {
    let n = g_vec.len();
    if n == 0 {
        return (DVector::zeros(0), T::zero());
    }
    let eig = SymmetricEigen::new(linalg::symmetrize(g_mat));
    let lambda = &eig.eigenvalues;
    let q = &eig.eigenvectors;
    let beta = q.transpose() * g_vec;
    let lmax = lambda.max();
    let gnorm = g_vec.norm();
    let tiny = T::lit(1e-12) * (T::one() + lmax.abs());
    let top: Vec<usize> = (0..n).filter(|&i| lambda[i] >= lmax - tiny).collect();

    let value_of = |v: &DVector<T>| -> T {
        (0..n).fold(T::zero(), |acc, i| acc + lambda[i] * v[i] * v[i] + T::lit(2.0) * beta[i] * v[i])
    };

    let top_grad: T = top.iter().map(|&i| beta[i] * beta[i]).fold(T::zero(), |a, b| a + b);
    if top_grad.sqrt() <= T::lit(1e-12) * (T::one() + gnorm) {
        let mut v = DVector::zeros(n);
        let mut norm2 = T::zero();
        for i in 0..n {
            if !top.contains(&i) {
                v[i] = beta[i] / (lmax - lambda[i]);
                norm2 += v[i] * v[i];
            }
        }
        if norm2 <= T::one() {
            v[top[0]] = (T::one() - norm2).sqrt();
            let val = value_of(&v);
            return (q * v, val);
        }
    }

    // secular equation on (λ_max, λ_max + ‖g‖]
    let step = |mu: T| DVector::from_fn(n, |i, _| beta[i] / (mu - lambda[i]));
    let mut lo = lmax;
    let mut hi = lmax + gnorm.max(T::eps());
    let mut mu = hi;
    for _ in 0..500 {
        let v = step(mu);
        let norm = v.norm();
        if (norm - T::one()).abs() <= T::lit(4.0) * T::eps() {
            break;
        }
        if norm > T::one() {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= T::eps() * (T::one() + mu.abs()) {
            break;
        }
        // Newton on 1/‖v(μ)‖ − 1
        let d3: T = (0..n).fold(T::zero(), |acc, i| {
            let den = mu - lambda[i];
            acc + beta[i] * beta[i] / (den * den * den)
        });
        let psi = T::one() / norm - T::one();
        let dpsi = d3 / (norm * norm * norm);
        let newton = mu - psi / dpsi;
        mu = if dpsi > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * T::lit(0.5)
        };
    }
    let v = step(mu);
    let val = value_of(&v);
    (q * v, val)
}

/// Largest `LQTE(u, predict(u, g_w))` over admissible `g_w`, with a maximizer.
pub fn worst_case_cost<T: Scalar>(
    pred: &OutputPredictor<T>,
    prob: &TrackingProblem<T>,
    param: &NoiseParameterization<T>,
    u: &DVector<T>,
) -> Result<WorstCase<T>> {
    if param.is_empty() {
        return Err(Error::Infeasible(format!(
            "admissible noise set is empty (max constraint value {})",
            param.reduced_set.level()
        )));
    }
    if u.len() != pred.b_u.ncols() {
        return Err(Error::dim(format!("u has {} entries, expected {}", u.len(), pred.b_u.ncols())));
    }
    let set = &param.reduced_set;
    let center_gw = param.center_gw();
    if set.is_singleton() {
        let y = pred.predict(u, &center_gw)?;
        return Ok(WorstCase { gamma_wc: lqte(prob, u, &y), g_w: center_gw });
    }
    // g_w = V (c + E v), ‖v‖ ≤ 1
    let q_bar = prob.q_bar();
    let k = &pred.b_w * &param.reduced_basis * set.ball_map();
    let d = pred.predict(u, &center_gw)? - prob.reference();
    let kq = k.transpose() * &q_bar;
    let g_mat = linalg::symmetrize(&(&kq * &k));
    let g_vec = &kq * &d;
    let (v, _) = maximize_on_unit_ball(&g_mat, &g_vec);
    let g_w = param.gw_from_reduced(&set.from_unit_ball(&v));
    let y = pred.predict(u, &g_w)?;
    Ok(WorstCase { gamma_wc: lqte(prob, u, &y), g_w })
}
