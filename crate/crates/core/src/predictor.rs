//! Explicit affine output predictor `y = B_u u + B_w g_w + y0` and the
//! finite-horizon tracking cost expressed as a quadratic form in `[1; g_w]`.

use nalgebra::{DMatrix, DVector, SVD};
use serde::Serialize;

use crate::behavioral::HankelPartition;
use crate::error::{Error, Result};
use crate::io::{matrix_to_rows, vector_to_vec};
use crate::linalg;
use crate::noise::NoiseParameterization;
use crate::Scalar;

const CONDITION_WARNING: f64 = 1e12;

/// Weights and reference of the tracking cost
/// `Σ_k ‖y_k − r_k‖²_Q + ‖u_k‖²_R` over `T_e` steps.
#[derive(Debug, Clone)]
pub struct TrackingProblem<T: Scalar> {
    reference: DVector<T>,
    q: DMatrix<T>,
    r: DMatrix<T>,
    t_e: usize,
}

fn check_psd<T: Scalar>(name: &str, w: &DMatrix<T>) -> Result<()> {
    if w.nrows() == 0 || w.nrows() != w.ncols() {
        return Err(Error::Cost(format!("{name} must be square, got {:?}", w.shape())));
    }
    if (w - w.transpose()).norm() > T::lit(1e-12) * T::one().max(w.norm()) {
        return Err(Error::Cost(format!("{name} is not symmetric")));
    }
    let low = linalg::min_eigenvalue(w);
    if low < -T::lit(1e-10) {
        return Err(Error::Cost(format!("{name} is not positive semidefinite (eigenvalue {low})")));
    }
    Ok(())
}

impl<T: Scalar> TrackingProblem<T> {
    pub fn new(reference: DVector<T>, q: DMatrix<T>, r: DMatrix<T>, t_e: usize) -> Result<Self> {
        check_psd("Q", &q)?;
        check_psd("R", &r)?;
        if t_e == 0 || reference.len() != q.nrows() * t_e {
            return Err(Error::dim(format!(
                "reference has {} entries, expected {}·{t_e}",
                reference.len(),
                q.nrows()
            )));
        }
        Ok(Self { reference, q, r, t_e })
    }

    /// Regulation to zero output.
    pub fn regulation(q: DMatrix<T>, r: DMatrix<T>, t_e: usize) -> Result<Self> {
        let p = q.nrows();
        Self::new(DVector::zeros(p * t_e), q, r, t_e)
    }

    pub fn reference(&self) -> &DVector<T> {
        &self.reference
    }
    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }
    pub fn r(&self) -> &DMatrix<T> {
        &self.r
    }
    pub fn horizon(&self) -> usize {
        self.t_e
    }
    pub fn output_dim(&self) -> usize {
        self.q.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.r.nrows()
    }

    /// `I_{T_e} ⊗ Q`
    pub fn q_bar(&self) -> DMatrix<T> {
        linalg::block_diag_repeat(&self.q, self.t_e)
    }

    /// `I_{T_e} ⊗ R`
    pub fn r_bar(&self) -> DMatrix<T> {
        linalg::block_diag_repeat(&self.r, self.t_e)
    }

    /// Same weights with a new reference.
    pub fn with_reference(&self, reference: DVector<T>) -> Result<Self> {
        Self::new(reference, self.q.clone(), self.r.clone(), self.t_e)
    }
}

/// `(y − r)ᵀ Q̄ (y − r) + uᵀ R̄ u`, accumulated step by step.
///
/// Panics when `u` or `y` do not match the problem's horizon.
pub fn lqte<T: Scalar>(prob: &TrackingProblem<T>, u: &DVector<T>, y: &DVector<T>) -> T {
    let (m, p, t_e) = (prob.input_dim(), prob.output_dim(), prob.t_e);
    assert_eq!(u.len(), m * t_e, "input length");
    assert_eq!(y.len(), p * t_e, "output length");
    let mut cost = T::zero();
    for k in 0..t_e {
        let e = y.rows(k * p, p) - prob.reference.rows(k * p, p);
        let uk = u.rows(k * m, m);
        cost += e.dot(&(&prob.q * &e)) + uk.dot(&(&prob.r * uk));
    }
    cost
}

/// Output rows kept in `Λ = [U_p; Y_p1; U_f]`.
#[derive(Debug, Clone)]
pub struct RowSelection<T: Scalar> {
    /// Indices into the rows of `Y_p`, increasing.
    pub selected: Vec<usize>,
    pub lambda: DMatrix<T>,
}

impl<T: Scalar> RowSelection<T> {
    /// Rows of `Y_p` left out of `Λ`.
    pub fn dropped(&self, y_p_rows: usize) -> Vec<usize> {
        (0..y_p_rows).filter(|i| !self.selected.contains(i)).collect()
    }
}

/// Greedy selection over the rows of `Y_p` in natural order, keeping a row
/// only when it raises the numerical rank of the stack built so far.
pub fn select_rows<T: Scalar>(part: &HankelPartition<T>) -> Result<RowSelection<T>> {
    let tol = part.rank_tol;
    let base = linalg::vstack(&[&part.u_p, &part.u_f]);
    let mut rank = linalg::numerical_rank(&base, tol);
    if rank < base.nrows() {
        return Err(Error::PersistentExcitation(
            "[U_p; U_f] does not have full row rank".into(),
        ));
    }
    let mut selected = Vec::new();
    let mut stack = base;
    for i in 0..part.y_p.nrows() {
        let row = part.y_p.rows(i, 1).into_owned();
        let candidate = linalg::vstack(&[&stack, &row]);
        let r = linalg::numerical_rank(&candidate, tol);
        if r > rank {
            rank = r;
            stack = candidate;
            selected.push(i);
        }
    }
    let y_p1 = DMatrix::from_fn(selected.len(), part.columns(), |i, j| part.y_p[(selected[i], j)]);
    let lambda = linalg::vstack(&[&part.u_p, &y_p1, &part.u_f]);
    Ok(RowSelection { selected, lambda })
}

/// `y = B_u u + B_w g_w + y0` for one recent window.
#[derive(Debug, Clone)]
pub struct OutputPredictor<T: Scalar> {
    pub selected_rows: Vec<usize>,
    pub lambda: DMatrix<T>,
    /// `Λᵀ(ΛΛᵀ)⁻¹`
    pub lambda_right_inverse: DMatrix<T>,
    pub b_ini: DMatrix<T>,
    pub b_u: DMatrix<T>,
    pub b_w: DMatrix<T>,
    pub y0: DVector<T>,
    pub m: usize,
    pub p: usize,
    pub t_e: usize,
}

pub fn build_predictor<T: Scalar>(
    part: &HankelPartition<T>,
    selection: &RowSelection<T>,
    param: &NoiseParameterization<T>,
) -> Result<OutputPredictor<T>> {
    let lambda = &selection.lambda;
    let rows = lambda.nrows();
    let svd = SVD::new(lambda.clone(), true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let thr = linalg::rank_threshold(smax, rows, lambda.ncols(), part.rank_tol);
    if rows > lambda.ncols() || smin <= thr {
        return Err(Error::Conditioning(format!(
            "Λ is numerically rank deficient (σ_min = {smin}, σ_max = {smax})"
        )));
    }
    let cond = (smax / smin).as_f64();
    if cond > CONDITION_WARNING {
        log::warn!("Λ has condition number {cond:.3e}; predictor may be inaccurate");
    }
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut sigma_inv = DMatrix::zeros(rows, rows);
    for i in 0..rows {
        sigma_inv[(i, i)] = T::one() / svd.singular_values[i];
    }
    let right_inverse = v_t.transpose() * sigma_inv * u.transpose();

    let (m, t_e) = (part.m, part.t_e);
    let future = right_inverse.columns(rows - m * t_e, m * t_e).into_owned();
    let b_u = &part.y_f * &future;
    let b_ini = &part.y_f - &b_u * &part.u_f;
    let b_w = &b_ini * &param.m;
    let y0 = &b_ini * &param.g_w_star;
    Ok(OutputPredictor {
        selected_rows: selection.selected.clone(),
        lambda: lambda.clone(),
        lambda_right_inverse: right_inverse,
        b_ini,
        b_u,
        b_w,
        y0,
        m,
        p: part.p,
        t_e,
    })
}

impl<T: Scalar> OutputPredictor<T> {
    pub fn n_w(&self) -> usize {
        self.b_w.ncols()
    }

    pub fn predict(&self, u: &DVector<T>, g_w: &DVector<T>) -> Result<DVector<T>> {
        if u.len() != self.b_u.ncols() || g_w.len() != self.n_w() {
            return Err(Error::dim(format!(
                "predict expects u of length {} and g_w of length {}, got {} and {}",
                self.b_u.ncols(),
                self.n_w(),
                u.len(),
                g_w.len()
            )));
        }
        Ok(&self.b_u * u + &self.b_w * g_w + &self.y0)
    }

    pub fn to_document(&self) -> PredictorDocument {
        PredictorDocument {
            selected_rows: self.selected_rows.clone(),
            lambda: matrix_to_rows(&self.lambda),
            b_ini: matrix_to_rows(&self.b_ini),
            b_u: matrix_to_rows(&self.b_u),
            b_w: matrix_to_rows(&self.b_w),
            y0: vector_to_vec(&self.y0),
        }
    }
}

/// Debug dump of predictor matrices.
#[derive(Debug, Clone, Serialize)]
pub struct PredictorDocument {
    pub selected_rows: Vec<usize>,
    pub lambda: Vec<Vec<f64>>,
    pub b_ini: Vec<Vec<f64>>,
    pub b_u: Vec<Vec<f64>>,
    pub b_w: Vec<Vec<f64>>,
    pub y0: Vec<f64>,
}

/// `Q_g(u, γ)`: `[1; g_w]ᵀ Q_g [1; g_w] = γ − LQTE(u, predict(u, g_w))`.
pub fn build_qg<T: Scalar>(
    pred: &OutputPredictor<T>,
    prob: &TrackingProblem<T>,
    u: &DVector<T>,
    gamma: T,
) -> DMatrix<T> {
    let q_bar = prob.q_bar();
    let r_bar = prob.r_bar();
    let e = &pred.b_u * u + &pred.y0 - prob.reference();
    let qe = &q_bar * &e;
    let n_w = pred.n_w();
    let mut qg = DMatrix::zeros(n_w + 1, n_w + 1);
    qg[(0, 0)] = gamma - u.dot(&(&r_bar * u)) - e.dot(&qe);
    let off = -(pred.b_w.transpose() * &qe);
    qg.view_mut((1, 0), (n_w, 1)).copy_from(&off);
    qg.view_mut((0, 1), (1, n_w)).copy_from(&off.transpose());
    let lower = -(pred.b_w.transpose() * &q_bar * &pred.b_w);
    qg.view_mut((1, 1), (n_w, n_w)).copy_from(&linalg::symmetrize(&lower));
    qg
}
