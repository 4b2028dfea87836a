//! Quadratic noise bounds on the recent output window and the affine
//! parameterization of every noise vector consistent with the data.

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::behavioral::HankelPartition;
use crate::error::{Error, Result};
use crate::io::{matrix_from_rows, matrix_to_rows, vector_from_slice, vector_to_vec};
use crate::linalg;
use crate::Scalar;

/// `[1; w]ᵀ Φ [1; w] ≥ 0` with `Φ = [[Φ11, Φ12], [Φ12ᵀ, Φ22]]`, `Φ22 ≺ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T: Scalar> {
    phi11: T,
    phi12: DVector<T>,
    phi22: DMatrix<T>,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn new(phi11: T, phi12: DVector<T>, phi22: DMatrix<T>) -> Result<Self> {
        let d = phi22.nrows();
        if d == 0 || phi22.ncols() != d || phi12.len() != d {
            return Err(Error::NoiseModel(format!(
                "Φ12 has {} entries and Φ22 is {:?}; expected a common dimension",
                phi12.len(),
                phi22.shape()
            )));
        }
        let scale = T::one().max(phi22.norm());
        if (&phi22 - phi22.transpose()).norm() > T::lit(1e-12) * scale {
            return Err(Error::NoiseModel("Φ22 is not symmetric".into()));
        }
        let phi22 = linalg::symmetrize(&phi22);
        let top = linalg::max_eigenvalue(&phi22);
        if top >= -T::lit(1e-12) * scale {
            return Err(Error::NoiseModel(format!(
                "Φ22 must be negative definite, largest eigenvalue is {top}"
            )));
        }
        Ok(Self { phi11, phi12, phi22 })
    }

    /// Accumulated-energy bound `wᵀw ≤ T_ini·p·ε`.
    pub fn energy_bound(epsilon: T, t_ini: usize, p: usize) -> Result<Self> {
        let d = t_ini * p;
        Self::new(
            T::lit(d as f64) * epsilon,
            DVector::zeros(d),
            -DMatrix::identity(d, d),
        )
    }

    pub fn dim(&self) -> usize {
        self.phi12.len()
    }
    pub fn phi11(&self) -> T {
        self.phi11
    }
    pub fn phi12(&self) -> &DVector<T> {
        &self.phi12
    }
    pub fn phi22(&self) -> &DMatrix<T> {
        &self.phi22
    }

    /// The full symmetric `Φ`.
    pub fn matrix(&self) -> DMatrix<T> {
        let d = self.dim();
        let mut phi = DMatrix::zeros(d + 1, d + 1);
        phi[(0, 0)] = self.phi11;
        phi.view_mut((0, 1), (1, d)).copy_from(&self.phi12.transpose());
        phi.view_mut((1, 0), (d, 1)).copy_from(&self.phi12);
        phi.view_mut((1, 1), (d, d)).copy_from(&self.phi22);
        phi
    }

    /// `[1; w]ᵀ Φ [1; w]`; non-negative exactly on admissible noise.
    pub fn evaluate(&self, w: &DVector<T>) -> T {
        self.phi11 + T::lit(2.0) * self.phi12.dot(w) + w.dot(&(&self.phi22 * w))
    }

    /// The admissible set as an ellipsoid in `w` space.
    pub fn ellipsoid(&self) -> Result<Ellipsoid<T>> {
        Ellipsoid::from_concave_quadratic(self.phi11, &self.phi12, &self.phi22)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str::<NoiseDocument>(s)?.into_model()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_document(&self) -> NoiseDocument {
        NoiseDocument {
            phi11: NumberOrRows::Number(self.phi11.as_f64()),
            phi12: NumberOrRows::Rows(vec![vector_to_vec(&self.phi12)]),
            phi22: matrix_to_rows(&self.phi22),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberOrRows {
    Number(f64),
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl NumberOrRows {
    fn flatten(&self) -> Vec<f64> {
        match self {
            NumberOrRows::Number(x) => vec![*x],
            NumberOrRows::Flat(v) => v.clone(),
            NumberOrRows::Rows(r) => r.iter().flatten().copied().collect(),
        }
    }
}

/// JSON form of a noise model (`phi11`, `phi12`, `phi22`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseDocument {
    pub phi11: NumberOrRows,
    pub phi12: NumberOrRows,
    pub phi22: Vec<Vec<f64>>,
}

impl NoiseDocument {
    pub fn into_model<T: Scalar>(self) -> Result<NoiseModel<T>> {
        let phi11 = self.phi11.flatten();
        if phi11.len() != 1 {
            return Err(Error::NoiseModel("phi11 must be a scalar".into()));
        }
        NoiseModel::new(
            T::lit(phi11[0]),
            vector_from_slice(&self.phi12.flatten()),
            matrix_from_rows(&self.phi22)?,
        )
    }
}

/// `{x : (x − c)ᵀ P (x − c) ≤ level}` with `P = L Lᵀ ≻ 0`.
///
/// Built from a concave quadratic `a + 2bᵀx + xᵀCx` (`C ≺ 0`), whose
/// maximum value is `level` and whose super-level set at zero is this set.
#[derive(Debug, Clone)]
pub struct Ellipsoid<T: Scalar> {
    center: DVector<T>,
    level: T,
    chol: Option<Cholesky<T, Dyn>>,
    tol: T,
}

impl<T: Scalar> Ellipsoid<T> {
    pub fn from_concave_quadratic(a: T, b: &DVector<T>, c: &DMatrix<T>) -> Result<Self> {
        let r = b.len();
        let scale = T::one() + a.abs() + b.norm();
        let tol = T::lit(1e-10) * scale;
        if r == 0 {
            return Ok(Self { center: DVector::zeros(0), level: a, chol: None, tol });
        }
        let p = -linalg::symmetrize(c);
        let chol = Cholesky::new(p).ok_or_else(|| {
            Error::Conditioning("quadratic constraint is not strictly concave on the reduced space".into())
        })?;
        let center = chol.solve(b);
        let level = a + b.dot(&center);
        Ok(Self { center, level, chol: Some(chol), tol })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    /// Maximum of the generating quadratic; the set is empty when negative.
    pub fn level(&self) -> T {
        self.level
    }

    pub fn is_empty(&self) -> bool {
        self.level < -self.tol
    }

    /// Whether the set collapses to its center (within tolerance).
    pub fn is_singleton(&self) -> bool {
        !self.is_empty() && (self.dim() == 0 || self.level <= self.tol)
    }

    /// Image of a point `v` of the unit ball: `c + √level · L⁻ᵀ v`.
    pub fn from_unit_ball(&self, v: &DVector<T>) -> DVector<T> {
        match &self.chol {
            None => self.center.clone(),
            Some(chol) => {
                let radius = self.level.max(T::zero()).sqrt();
                let mut x = v * radius;
                chol.l().tr_solve_lower_triangular_mut(&mut x);
                x + &self.center
            }
        }
    }

    /// `√level · L⁻ᵀ` as an explicit matrix.
    pub fn ball_map(&self) -> DMatrix<T> {
        let r = self.dim();
        match &self.chol {
            None => DMatrix::zeros(0, 0),
            Some(chol) => {
                let radius = self.level.max(T::zero()).sqrt();
                let mut m = DMatrix::identity(r, r) * radius;
                chol.l().tr_solve_lower_triangular_mut(&mut m);
                m
            }
        }
    }

    /// Uniform sample from the ellipsoid.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<DVector<T>> {
        if self.is_empty() {
            return Err(Error::Infeasible(format!(
                "quadratic constraint set is empty (maximum {})",
                self.level
            )));
        }
        Ok(self.from_unit_ball(&uniform_in_ball(self.dim(), rng)))
    }
}

/// Uniform point in the unit ball of `R^dim`: normal direction, radius `U^{1/dim}`.
pub fn uniform_in_ball<T: Scalar, R: Rng>(dim: usize, rng: &mut R) -> DVector<T> {
    if dim == 0 {
        return DVector::zeros(0);
    }
    let mut dir: DVector<f64> = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
    while dir.norm() == 0.0 {
        dir = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
    }
    let radius = rng.random::<f64>().powf(1.0 / dim as f64);
    let v = dir.normalize() * radius;
    v.map(T::lit)
}

/// Every admissible noise is `w = −Y_p M g_w + w0` with
/// `[1; g_w]ᵀ A_w [1; g_w] ≥ 0`.
#[derive(Debug, Clone)]
pub struct NoiseParameterization<T: Scalar> {
    /// Orthonormal basis of `ker(U_p)`.
    pub m: DMatrix<T>,
    pub g_w_star: DVector<T>,
    pub w0: DVector<T>,
    pub a_w: DMatrix<T>,
    /// `Y_p M`
    pub y_p_m: DMatrix<T>,
    /// Orthonormal basis of the complement of `ker(Y_p M)` in `g_w` space.
    pub reduced_basis: DMatrix<T>,
    /// Feasible set in reduced coordinates `z`, with `g_w = reduced_basis · z`.
    pub reduced_set: Ellipsoid<T>,
}

impl<T: Scalar> NoiseParameterization<T> {
    pub fn n_w(&self) -> usize {
        self.m.ncols()
    }

    /// Dimension of the distinct-noise subspace.
    pub fn reduced_dim(&self) -> usize {
        self.reduced_basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.reduced_set.is_empty()
    }

    pub fn gw_from_reduced(&self, z: &DVector<T>) -> DVector<T> {
        &self.reduced_basis * z
    }

    /// `g_w` of the reduced ellipsoid's center.
    pub fn center_gw(&self) -> DVector<T> {
        self.gw_from_reduced(self.reduced_set.center())
    }

    fn check_gw(&self, g_w: &DVector<T>) -> Result<()> {
        if g_w.len() != self.n_w() {
            return Err(Error::dim(format!(
                "g_w has {} entries, expected {}",
                g_w.len(),
                self.n_w()
            )));
        }
        Ok(())
    }

    /// `[1; g_w]ᵀ A_w [1; g_w]`
    pub fn constraint_value(&self, g_w: &DVector<T>) -> Result<T> {
        self.check_gw(g_w)?;
        let a12 = self.a_w.view((1, 0), (self.n_w(), 1));
        let a22 = self.a_w.view((1, 1), (self.n_w(), self.n_w()));
        Ok(self.a_w[(0, 0)] + T::lit(2.0) * a12.column(0).dot(g_w) + g_w.dot(&(a22 * g_w)))
    }

    pub fn noise_from_gw(&self, g_w: &DVector<T>) -> Result<DVector<T>> {
        self.check_gw(g_w)?;
        Ok(&self.w0 - &self.y_p_m * g_w)
    }

    pub fn is_feasible_gw(&self, g_w: &DVector<T>, tol: T) -> bool {
        self.constraint_value(g_w).map(|v| v >= -tol).unwrap_or(false)
    }

    /// `count` uniform draws over the reduced ellipsoid, padded with zeros
    /// along `ker(Y_p M)`.
    pub fn sample_feasible_gw_with<R: Rng>(&self, count: usize, rng: &mut R) -> Result<Vec<DVector<T>>> {
        if self.is_empty() {
            return Err(Error::Infeasible(format!(
                "no admissible noise is consistent with the data (max constraint value {})",
                self.reduced_set.level()
            )));
        }
        (0..count)
            .map(|_| self.reduced_set.sample(rng).map(|z| self.gw_from_reduced(&z)))
            .collect()
    }

    pub fn sample_feasible_gw(&self, count: usize, seed: u64) -> Result<Vec<DVector<T>>> {
        self.sample_feasible_gw_with(count, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Kernel basis, particular solution, offset `w0` and constraint matrix `A_w`
/// for a recent window `(u_ini, y_ini)`.
pub fn build_parameterization<T: Scalar>(
    part: &HankelPartition<T>,
    u_ini: &DVector<T>,
    y_ini: &DVector<T>,
    noise: &NoiseModel<T>,
) -> Result<NoiseParameterization<T>> {
    let (rows_u, rows_y) = (part.m * part.t_ini, part.p * part.t_ini);
    if u_ini.len() != rows_u || y_ini.len() != rows_y {
        return Err(Error::dim(format!(
            "recent window must have {rows_u} inputs and {rows_y} outputs, got {} and {}",
            u_ini.len(),
            y_ini.len()
        )));
    }
    if noise.dim() != rows_y {
        return Err(Error::dim(format!(
            "noise model acts on {} outputs, window has {rows_y}",
            noise.dim()
        )));
    }
    let tol = part.rank_tol;
    if linalg::numerical_rank(&part.u_p, tol) < rows_u {
        return Err(Error::PersistentExcitation("U_p does not have full row rank".into()));
    }
    let m = linalg::kernel_basis(&part.u_p, tol);
    if m.ncols() == 0 {
        return Err(Error::DegenerateKernel);
    }
    let gram = Cholesky::new(&part.u_p * part.u_p.transpose())
        .ok_or_else(|| Error::Conditioning("U_p U_pᵀ is not positive definite".into()))?;
    let g_w_star = part.u_p.transpose() * gram.solve(u_ini);
    let w0 = y_ini - &part.y_p * &g_w_star;

    let y_p_m = &part.y_p * &m;
    let phi22_w0 = noise.phi22() * &w0;
    // column form of the off-diagonal block: −MᵀY_pᵀ(Φ12ᵀ + Φ22 w0)
    let a12 = -(y_p_m.transpose() * (noise.phi12() + &phi22_w0));
    let a11 = noise.phi11() + T::lit(2.0) * noise.phi12().dot(&w0) + w0.dot(&phi22_w0);
    let a22 = linalg::symmetrize(&(y_p_m.transpose() * noise.phi22() * &y_p_m));

    let n_w = m.ncols();
    let mut a_w = DMatrix::zeros(n_w + 1, n_w + 1);
    a_w[(0, 0)] = a11;
    a_w.view_mut((1, 0), (n_w, 1)).copy_from(&a12);
    a_w.view_mut((0, 1), (1, n_w)).copy_from(&a12.transpose());
    a_w.view_mut((1, 1), (n_w, n_w)).copy_from(&a22);

    let reduced_basis = linalg::row_space_basis(&y_p_m, tol);
    let b = reduced_basis.transpose() * &a12;
    let c = reduced_basis.transpose() * &a22 * &reduced_basis;
    let reduced_set = Ellipsoid::from_concave_quadratic(a11, &b, &c)?;

    Ok(NoiseParameterization { m, g_w_star, w0, a_w, y_p_m, reduced_basis, reduced_set })
}
