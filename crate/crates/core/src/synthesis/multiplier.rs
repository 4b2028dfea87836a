//! Exact solution of the robust tracking problem by a scalar search over the
//! S-lemma multiplier α.
//!
//! For fixed α the constraint `Q_g(u, γ) − α A_w ⪰ 0` says
//! `γ ≥ max_z { cost(u, z) + α q(z) }`, where `z` are reduced noise
//! coordinates and `q` the noise constraint. Once α exceeds the point where
//! the bracket becomes strictly concave in `z`, the max and the min over `u`
//! are attained at the stationary point of a convex–concave quadratic. The
//! resulting value `φ(α)` is convex, so `γ* = min_α φ(α)` is a
//! one-dimensional problem.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::noise::NoiseParameterization;
use crate::predictor::{OutputPredictor, TrackingProblem};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierSearch {
    /// Log-spaced points used to bracket the minimizer.
    pub grid_points: usize,
    /// Decades covered on each side of the natural multiplier scale.
    pub decades: f64,
    pub refine_iterations: usize,
}

impl Default for MultiplierSearch {
    fn default() -> Self {
        Self { grid_points: 161, decades: 8.0, refine_iterations: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct MultiplierSolution<T: Scalar> {
    pub u: DVector<T>,
    pub gamma: T,
    pub alpha: T,
    pub evaluations: usize,
}

struct Reduced<T: Scalar> {
    h_uu: DMatrix<T>,
    h_uz: DMatrix<T>,
    s_zz: DMatrix<T>,
    c_zz: DMatrix<T>,
    h_u: DVector<T>,
    g_z: DVector<T>,
    b: DVector<T>,
    e_qe: T,
    a11: T,
}

impl<T: Scalar> Reduced<T> {
    /// `φ(α)` and the minimizing input, or `None` outside the concave range.
    fn value(&self, alpha: T) -> Option<(T, DVector<T>)> {
        let (nu, r) = (self.h_uu.nrows(), self.s_zz.nrows());
        let mut h = DMatrix::zeros(nu + r, nu + r);
        h.view_mut((0, 0), (nu, nu)).copy_from(&self.h_uu);
        h.view_mut((0, nu), (nu, r)).copy_from(&self.h_uz);
        h.view_mut((nu, 0), (r, nu)).copy_from(&self.h_uz.transpose());
        h.view_mut((nu, nu), (r, r)).copy_from(&(&self.s_zz + &self.c_zz * alpha));
        let rhs = linalg::vcat(&[&self.h_u, &(&self.g_z + &self.b * alpha)]);
        let x = h.lu().solve(&rhs)?;
        let val = self.e_qe + self.a11 * alpha - rhs.dot(&x);
        if !val.is_finite() {
            return None;
        }
        Some((val, -x.rows(0, nu).into_owned()))
    }
}

impl MultiplierSearch {
    pub fn solve<T: Scalar>(
        &self,
        pred: &OutputPredictor<T>,
        prob: &TrackingProblem<T>,
        param: &NoiseParameterization<T>,
    ) -> Result<MultiplierSolution<T>> {
        if param.is_empty() {
            return Err(Error::Infeasible("admissible noise set is empty".into()));
        }
        let q_bar = prob.q_bar();
        let e = &pred.y0 - prob.reference();
        let basis = &param.reduced_basis;
        let b_r = &pred.b_w * basis;
        let n_w = param.n_w();
        let a12 = param.a_w.view((1, 0), (n_w, 1)).into_owned();
        let a22 = param.a_w.view((1, 1), (n_w, n_w)).into_owned();
        let red = Reduced {
            h_uu: linalg::symmetrize(&(prob.r_bar() + pred.b_u.transpose() * &q_bar * &pred.b_u)),
            h_uz: pred.b_u.transpose() * &q_bar * &b_r,
            s_zz: linalg::symmetrize(&(b_r.transpose() * &q_bar * &b_r)),
            c_zz: linalg::symmetrize(&(basis.transpose() * a22 * basis)),
            h_u: pred.b_u.transpose() * &q_bar * &e,
            g_z: b_r.transpose() * &q_bar * &e,
            b: basis.transpose() * a12.column(0),
            e_qe: e.dot(&(&q_bar * &e)),
            a11: param.a_w[(0, 0)],
        };

        if basis.ncols() == 0 {
            // noise does not reach the output: γ* is the nominal optimum at α = 0
            let (gamma, u) = red
                .value(T::zero())
                .ok_or_else(|| Error::Solver("singular input Hessian".into()))?;
            return Ok(MultiplierSolution { u, gamma, alpha: T::zero(), evaluations: 1 });
        }

        // smallest α making S_zz + α C_zz negative definite
        let p = -red.c_zz.clone();
        let chol = p
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Conditioning("reduced noise constraint is not strictly concave".into()))?;
        let l = chol.l();
        let l_inv_s = l
            .solve_lower_triangular(&red.s_zz)
            .ok_or_else(|| Error::Conditioning("singular Cholesky factor".into()))?;
        let whitened = l
            .solve_lower_triangular(&l_inv_s.transpose())
            .ok_or_else(|| Error::Conditioning("singular Cholesky factor".into()))?;
        let alpha_min = linalg::max_eigenvalue(&whitened).max(T::zero());
        let scale = (T::one() + alpha_min + red.s_zz.norm() / p.norm()).as_f64();

        let base = alpha_min.as_f64();
        let eval = |t: f64| -> f64 {
            red.value(T::lit(base + t.exp()))
                .map_or(f64::INFINITY, |(v, _)| v.as_f64())
        };
        let span = self.decades * std::f64::consts::LN_10;
        let (t_lo, t_hi) = (scale.ln() - span, scale.ln() + span);
        let n = self.grid_points.max(3);
        let grid: Vec<f64> = (0..n).map(|k| t_lo + (t_hi - t_lo) * k as f64 / (n - 1) as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&t| eval(t)).collect();
        let mut evaluations = n;
        let best = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        if !values[best].is_finite() {
            return Err(Error::Solver("multiplier search found no finite bound".into()));
        }

        // golden-section refinement on the bracketing grid cells
        let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n - 1)]);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (eval(c), eval(d));
        evaluations += 2;
        for _ in 0..self.refine_iterations {
            if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(d);
            }
            evaluations += 1;
        }
        let mut t_star = if fc <= fd { c } else { d };
        if values[best] < fc.min(fd) {
            t_star = grid[best];
        }
        let alpha = T::lit(base + t_star.exp());
        let (gamma, u) = red
            .value(alpha)
            .ok_or_else(|| Error::Solver("multiplier search lost the concave range".into()))?;
        Ok(MultiplierSolution { u, gamma, alpha, evaluations })
    }
}
