//! Data-driven trajectory representation: Hankel matrices of a noiseless
//! historical experiment, persistent excitation, trajectory membership and
//! output prediction from an initial input/output window.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::Scalar;

/// Default relative singular-value cutoff for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Default absolute residual bound for trajectory membership.
pub const DEFAULT_TRAJECTORY_TOL: f64 = 1e-6;

/// Historical input/output record of length `T_d`, one column per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryData<T: Scalar> {
    u: DMatrix<T>,
    y: DMatrix<T>,
}

impl<T: Scalar> TrajectoryData<T> {
    pub fn new(u: DMatrix<T>, y: DMatrix<T>) -> Result<Self> {
        if u.nrows() == 0 || y.nrows() == 0 {
            return Err(Error::dim("input and output dimensions must be at least 1"));
        }
        if u.ncols() == 0 {
            return Err(Error::dim("data length must be at least 1"));
        }
        if u.ncols() != y.ncols() {
            return Err(Error::dim(format!(
                "input has {} samples but output has {}",
                u.ncols(),
                y.ncols()
            )));
        }
        Ok(Self { u, y })
    }

    pub fn inputs(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn outputs(&self) -> &DMatrix<T> {
        &self.y
    }

    pub fn input_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.y.nrows()
    }

    pub fn len(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.u.ncols() == 0
    }
}

/// Hankel matrix of depth `depth`: block `(i, j)` is column `i + j` of `seq`.
pub fn build_hankel<T: Scalar>(seq: &DMatrix<T>, depth: usize) -> Result<DMatrix<T>> {
    let (q, t_d) = seq.shape();
    if depth == 0 || depth > t_d {
        return Err(Error::dim(format!(
            "Hankel depth {depth} outside 1..={t_d}"
        )));
    }
    let cols = t_d - depth + 1;
    let mut h = DMatrix::zeros(q * depth, cols);
    for i in 0..depth {
        for j in 0..cols {
            h.view_mut((i * q, j), (q, 1)).copy_from(&seq.column(i + j));
        }
    }
    Ok(h)
}

/// Whether the depth-`order` Hankel matrix of `seq` has full row rank.
pub fn is_persistently_exciting<T: Scalar>(seq: &DMatrix<T>, order: usize, rank_tol: T) -> bool {
    let (m, t_d) = seq.shape();
    if order == 0 || order > t_d || m * order > t_d - order + 1 {
        return false;
    }
    match build_hankel(seq, order) {
        Ok(h) => linalg::numerical_rank(&h, rank_tol) == m * order,
        Err(_) => false,
    }
}

/// Past/future split of the depth-`(T_ini + T_e)` Hankel matrices.
#[derive(Debug, Clone)]
pub struct HankelPartition<T: Scalar> {
    pub u_p: DMatrix<T>,
    pub y_p: DMatrix<T>,
    pub u_f: DMatrix<T>,
    pub y_f: DMatrix<T>,
    pub t_ini: usize,
    pub t_e: usize,
    pub m: usize,
    pub p: usize,
    /// Rank cutoff shared by every downstream rank or kernel computation.
    pub rank_tol: T,
}

impl<T: Scalar> HankelPartition<T> {
    pub fn columns(&self) -> usize {
        self.u_p.ncols()
    }

    /// `[U_p; Y_p]`
    pub fn past(&self) -> DMatrix<T> {
        linalg::vstack(&[&self.u_p, &self.y_p])
    }

    /// `[U_p; Y_p; U_f]`
    pub fn past_and_future_inputs(&self) -> DMatrix<T> {
        linalg::vstack(&[&self.u_p, &self.y_p, &self.u_f])
    }

    fn check_window(&self, u_ini: &DVector<T>, y_ini: &DVector<T>) -> Result<()> {
        if u_ini.len() != self.m * self.t_ini || y_ini.len() != self.p * self.t_ini {
            return Err(Error::dim(format!(
                "initial window must have {} inputs and {} outputs, got {} and {}",
                self.m * self.t_ini,
                self.p * self.t_ini,
                u_ini.len(),
                y_ini.len()
            )));
        }
        Ok(())
    }

    /// Infinity-norm residual of the least-squares fit `[U_p; Y_p] g ≈ [u_ini; y_ini]`.
    pub fn trajectory_residual(&self, u_ini: &DVector<T>, y_ini: &DVector<T>) -> Result<T> {
        self.check_window(u_ini, y_ini)?;
        let a = self.past();
        let b = linalg::vcat(&[u_ini, y_ini]);
        let g = linalg::min_norm_solve(&a, &b, self.rank_tol);
        Ok(linalg::inf_norm(&(a * g - b)))
    }
}

/// Split the historical data into `U_p, Y_p, U_f, Y_f`.
///
/// When `order` is given (typically `T_ini + T_e + n`), persistent excitation
/// of that order is verified.
pub fn partition<T: Scalar>(
    data: &TrajectoryData<T>,
    t_ini: usize,
    t_e: usize,
    order: Option<usize>,
    rank_tol: T,
) -> Result<HankelPartition<T>> {
    if t_ini == 0 || t_e == 0 {
        return Err(Error::dim("T_ini and T_e must be at least 1"));
    }
    let depth = t_ini + t_e;
    if depth > data.len() {
        return Err(Error::dim(format!(
            "T_ini + T_e = {depth} exceeds data length {}",
            data.len()
        )));
    }
    if let Some(order) = order {
        if !is_persistently_exciting(data.inputs(), order, rank_tol) {
            return Err(Error::PersistentExcitation(format!(
                "historical input is not persistently exciting of order {order}"
            )));
        }
    }
    let (m, p) = (data.input_dim(), data.output_dim());
    let hu = build_hankel(data.inputs(), depth)?;
    let hy = build_hankel(data.outputs(), depth)?;
    Ok(HankelPartition {
        u_p: hu.rows(0, m * t_ini).into_owned(),
        u_f: hu.rows(m * t_ini, m * t_e).into_owned(),
        y_p: hy.rows(0, p * t_ini).into_owned(),
        y_f: hy.rows(p * t_ini, p * t_e).into_owned(),
        t_ini,
        t_e,
        m,
        p,
        rank_tol,
    })
}

/// Whether `(u_ini, y_ini)` lies in the range of `[U_p; Y_p]` up to `tol`.
pub fn is_trajectory<T: Scalar>(
    part: &HankelPartition<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
    tol: T,
) -> bool {
    part.trajectory_residual(u_ini, y_ini)
        .map(|r| r <= tol)
        .unwrap_or(false)
}

/// Predicts the `T_e`-step output for input `u` following the window `(u_ini, y_ini)`.
pub fn simulate_ddriven<T: Scalar>(
    part: &HankelPartition<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
    u: &DVector<T>,
    tol: T,
) -> Result<DVector<T>> {
    if u.len() != part.m * part.t_e {
        return Err(Error::dim(format!(
            "future input must have {} entries, got {}",
            part.m * part.t_e,
            u.len()
        )));
    }
    let residual = part.trajectory_residual(u_ini, y_ini)?;
    if residual > tol {
        return Err(Error::InconsistentInitialCondition {
            residual: residual.as_f64(),
            tol: tol.as_f64(),
        });
    }
    let a = part.past_and_future_inputs();
    let b = linalg::vcat(&[u_ini, y_ini, u]);
    let g = linalg::min_norm_solve(&a, &b, part.rank_tol);
    Ok(&part.y_f * g)
}
