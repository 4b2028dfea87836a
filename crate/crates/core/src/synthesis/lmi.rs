//! Solver-neutral affine LMI: `F(x) = F0 + Σ_i x_i F_i ⪰ 0`, minimize `cᵀx`,
//! with sign constraints on selected variables.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::noise::NoiseParameterization;
use crate::predictor::{OutputPredictor, TrackingProblem};
use crate::Scalar;

/// Positions of the decision variables `(u, γ, α)` in the stacked vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    pub inputs: usize,
}

impl VariableLayout {
    pub fn gamma(&self) -> usize {
        self.inputs
    }
    pub fn alpha(&self) -> usize {
        self.inputs + 1
    }
    pub fn len(&self) -> usize {
        self.inputs + 2
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pack<T: Scalar>(&self, u: &DVector<T>, gamma: T, alpha: T) -> DVector<T> {
        let mut x = DVector::zeros(self.len());
        x.rows_mut(0, self.inputs).copy_from(u);
        x[self.gamma()] = gamma;
        x[self.alpha()] = alpha;
        x
    }

    pub fn unpack<T: Scalar>(&self, x: &DVector<T>) -> (DVector<T>, T, T) {
        (x.rows(0, self.inputs).into_owned(), x[self.gamma()], x[self.alpha()])
    }
}

#[derive(Debug, Clone)]
pub struct AffineLmi<T: Scalar> {
    pub constant: DMatrix<T>,
    pub coefficients: Vec<DMatrix<T>>,
    pub objective: DVector<T>,
    /// Variables constrained to be non-negative.
    pub nonnegative: Vec<usize>,
    pub layout: VariableLayout,
}

impl<T: Scalar> AffineLmi<T> {
    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    pub fn num_vars(&self) -> usize {
        self.coefficients.len()
    }

    pub fn evaluate(&self, x: &DVector<T>) -> DMatrix<T> {
        assert_eq!(x.len(), self.num_vars(), "variable count");
        let mut f = self.constant.clone();
        for (xi, fi) in x.iter().zip(&self.coefficients) {
            if *xi != T::zero() {
                f += fi * *xi;
            }
        }
        f
    }

    pub fn min_eigenvalue(&self, x: &DVector<T>) -> T {
        linalg::min_eigenvalue(&self.evaluate(x))
    }

    /// `Vᵀ F_i V` for every block.
    pub fn congruence(&self, basis: &DMatrix<T>) -> Self {
        let map = |f: &DMatrix<T>| linalg::symmetrize(&(basis.transpose() * f * basis));
        Self {
            constant: map(&self.constant),
            coefficients: self.coefficients.iter().map(map).collect(),
            objective: self.objective.clone(),
            nonnegative: self.nonnegative.clone(),
            layout: self.layout,
        }
    }
}

/// Basis that keeps the input and constant coordinates and maps the noise
/// block onto the reduced coordinates `g_w = V z`.
///
/// Directions in `ker(Y_p M)` leave the noise unchanged, so every block of the
/// LMI vanishes on them; without this restriction the problem has no strictly
/// feasible point.
pub fn noise_reduction_basis<T: Scalar>(inputs: usize, param: &NoiseParameterization<T>) -> DMatrix<T> {
    let (n_w, r) = (param.n_w(), param.reduced_dim());
    let mut basis = DMatrix::zeros(inputs + 1 + n_w, inputs + 1 + r);
    basis.view_mut((0, 0), (inputs + 1, inputs + 1)).fill_with_identity();
    basis.view_mut((inputs + 1, inputs + 1), (n_w, r)).copy_from(&param.reduced_basis);
    basis
}

/// `R̄ + B_uᵀ Q̄ B_u`, checked positive definite.
pub fn input_hessian<T: Scalar>(pred: &OutputPredictor<T>, prob: &TrackingProblem<T>) -> Result<DMatrix<T>> {
    let h = linalg::symmetrize(&(prob.r_bar() + pred.b_u.transpose() * prob.q_bar() * &pred.b_u));
    let low = linalg::min_eigenvalue(&h);
    if low <= T::lit(1e-10) {
        return Err(Error::CostNotDefinite { min_eig: low.as_f64() });
    }
    Ok(h)
}

/// The robust tracking LMI in the variables `(u, γ, α)`:
///
/// ```text
/// [ (R̄ + B_uᵀQ̄B_u)⁻¹   [u 0]             ]
/// [ [uᵀ; 0]            Q_gᵃ(u, γ) − α A_w ]  ⪰ 0
/// ```
///
/// `Q_gᵃ` is `Q_g` without the `uᵀ(R̄ + B_uᵀQ̄B_u)u` term, which the Schur
/// complement of the upper-left block restores.
pub fn assemble_lmi<T: Scalar>(
    pred: &OutputPredictor<T>,
    prob: &TrackingProblem<T>,
    param: &NoiseParameterization<T>,
) -> Result<AffineLmi<T>> {
    let nu = pred.b_u.ncols();
    let n_w = pred.n_w();
    if prob.reference().len() != pred.b_u.nrows() || prob.input_dim() * prob.horizon() != nu {
        return Err(Error::dim("tracking problem does not match the predictor horizon"));
    }
    if param.n_w() != n_w {
        return Err(Error::dim("noise parameterization does not match the predictor"));
    }
    let h = input_hessian(pred, prob)?;
    let h_inv = h
        .cholesky()
        .ok_or(Error::CostNotDefinite { min_eig: 0.0 })?
        .inverse();

    let size = nu + 1 + n_w;
    let k0 = nu; // row/column of the "1" entry of [1; g_w]
    let q_bar = prob.q_bar();
    let e = &pred.y0 - prob.reference();
    let qe = &q_bar * &e;
    let bw_t_q = pred.b_w.transpose() * &q_bar;

    let mut constant = DMatrix::zeros(size, size);
    constant.view_mut((0, 0), (nu, nu)).copy_from(&linalg::symmetrize(&h_inv));
    constant[(k0, k0)] = -e.dot(&qe);
    let off0 = -(&bw_t_q * &e);
    constant.view_mut((k0 + 1, k0), (n_w, 1)).copy_from(&off0);
    constant.view_mut((k0, k0 + 1), (1, n_w)).copy_from(&off0.transpose());
    constant
        .view_mut((k0 + 1, k0 + 1), (n_w, n_w))
        .copy_from(&linalg::symmetrize(&(-(&bw_t_q * &pred.b_w))));

    let mut coefficients = Vec::with_capacity(nu + 2);
    for j in 0..nu {
        let mut f = DMatrix::zeros(size, size);
        f[(j, k0)] = T::one();
        f[(k0, j)] = T::one();
        let bu_j = pred.b_u.column(j);
        f[(k0, k0)] = -T::lit(2.0) * bu_j.dot(&qe);
        let off = -(&bw_t_q * bu_j);
        f.view_mut((k0 + 1, k0), (n_w, 1)).copy_from(&off);
        f.view_mut((k0, k0 + 1), (1, n_w)).copy_from(&off.transpose());
        coefficients.push(f);
    }
    let mut f_gamma = DMatrix::zeros(size, size);
    f_gamma[(k0, k0)] = T::one();
    coefficients.push(f_gamma);
    let mut f_alpha = DMatrix::zeros(size, size);
    f_alpha.view_mut((k0, k0), (n_w + 1, n_w + 1)).copy_from(&(-&param.a_w));
    coefficients.push(f_alpha);

    let layout = VariableLayout { inputs: nu };
    let mut objective = DVector::zeros(layout.len());
    objective[layout.gamma()] = T::one();
    Ok(AffineLmi { constant, coefficients, objective, nonnegative: vec![layout.alpha()], layout })
}
