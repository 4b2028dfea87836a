//! Ground-truth discrete-time state-space model. Used to generate data and to
//! check the data-driven pipeline; the controller never sees these matrices.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::behavioral::{TrajectoryData, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::io::{matrix_from_rows, matrix_to_rows};
use crate::linalg;
use crate::Scalar;

/// `x_{k+1} = A x_k + B u_k`, `y_k = C x_k + D u_k`, constructed only when minimal.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
    rank_tol: T,
}

impl<T: Scalar> LtiSystem<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        Self::with_rank_tol(a, b, c, d, T::lit(DEFAULT_RANK_TOL))
    }

    pub fn with_rank_tol(
        a: DMatrix<T>,
        b: DMatrix<T>,
        c: DMatrix<T>,
        d: DMatrix<T>,
        rank_tol: T,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::dim(format!("A must be square and non-empty, got {:?}", a.shape())));
        }
        let (m, p) = (b.ncols(), c.nrows());
        if b.nrows() != n || m == 0 {
            return Err(Error::dim(format!("B must be {n}×m with m ≥ 1, got {:?}", b.shape())));
        }
        if c.ncols() != n || p == 0 {
            return Err(Error::dim(format!("C must be p×{n} with p ≥ 1, got {:?}", c.shape())));
        }
        if d.shape() != (p, m) {
            return Err(Error::dim(format!("D must be {p}×{m}, got {:?}", d.shape())));
        }
        let sys = Self { a, b, c, d, rank_tol };
        if linalg::numerical_rank(&sys.controllability_matrix(), rank_tol) < n {
            return Err(Error::NotMinimal("(A, B) is not controllable".into()));
        }
        if linalg::numerical_rank(&sys.observability_matrix(n), rank_tol) < n {
            return Err(Error::NotMinimal("(A, C) is not observable".into()));
        }
        Ok(sys)
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// `[B, AB, …, A^{n-1}B]`
    pub fn controllability_matrix(&self) -> DMatrix<T> {
        let (n, m) = (self.state_dim(), self.input_dim());
        let mut out = DMatrix::zeros(n, n * m);
        let mut blk = self.b.clone();
        for k in 0..n {
            out.view_mut((0, k * m), (n, m)).copy_from(&blk);
            blk = &self.a * blk;
        }
        out
    }

    /// `[C; CA; …; CA^{steps-1}]`
    pub fn observability_matrix(&self, steps: usize) -> DMatrix<T> {
        let (n, p) = (self.state_dim(), self.output_dim());
        let mut out = DMatrix::zeros(steps * p, n);
        let mut blk = self.c.clone();
        for k in 0..steps {
            out.view_mut((k * p, 0), (p, n)).copy_from(&blk);
            blk *= &self.a;
        }
        out
    }

    /// Smallest `l` for which the `l`-step observability matrix has rank `n`.
    pub fn lag(&self) -> Result<usize> {
        let n = self.state_dim();
        (1..=n)
            .find(|&l| linalg::numerical_rank(&self.observability_matrix(l), self.rank_tol) == n)
            .ok_or_else(|| Error::NotMinimal("(A, C) is not observable".into()))
    }

    /// Output sequence (`p × T`) and the state reached after the last input.
    pub fn simulate_with_state(
        &self,
        x0: &DVector<T>,
        u_seq: &DMatrix<T>,
    ) -> Result<(DMatrix<T>, DVector<T>)> {
        if x0.len() != self.state_dim() {
            return Err(Error::dim(format!(
                "initial state has {} entries, expected {}",
                x0.len(),
                self.state_dim()
            )));
        }
        if u_seq.nrows() != self.input_dim() {
            return Err(Error::dim(format!(
                "input sequence has {} channels, expected {}",
                u_seq.nrows(),
                self.input_dim()
            )));
        }
        let mut x = x0.clone();
        let mut y = DMatrix::zeros(self.output_dim(), u_seq.ncols());
        for (k, u) in u_seq.column_iter().enumerate() {
            y.set_column(k, &(&self.c * &x + &self.d * u));
            x = &self.a * x + &self.b * u;
        }
        Ok((y, x))
    }

    pub fn simulate(&self, x0: &DVector<T>, u_seq: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.simulate_with_state(x0, u_seq).map(|(y, _)| y)
    }

    /// One historical experiment driven by `rng`: standard-normal initial
    /// state, then i.i.d. uniform inputs on `[-amplitude, amplitude]`.
    /// Returns the data and the final state.
    pub fn generate_run<R: Rng>(
        &self,
        t_d: usize,
        amplitude: T,
        rng: &mut R,
    ) -> Result<(TrajectoryData<T>, DVector<T>)> {
        if t_d == 0 {
            return Err(Error::dim("data length must be at least 1"));
        }
        let x0 = DVector::from_fn(self.state_dim(), |_, _| {
            T::lit(rng.sample::<f64, _>(StandardNormal))
        });
        let u = uniform_matrix(self.input_dim(), t_d, amplitude, rng);
        let (y, x_end) = self.simulate_with_state(&x0, &u)?;
        Ok((TrajectoryData::new(u, y)?, x_end))
    }

    pub fn generate_historical(&self, t_d: usize, amplitude: T, seed: u64) -> Result<TrajectoryData<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.generate_run(t_d, amplitude, &mut rng).map(|(data, _)| data)
    }

    /// Random minimal system with spectral radius in `[0.3, 0.95)`, for
    /// exercising the data-driven pipeline on many plants.
    pub fn random_minimal<R: Rng>(n: usize, m: usize, p: usize, with_feedthrough: bool, rng: &mut R) -> Self {
        fn normal<T: Scalar, R: Rng>(r: usize, c: usize, rng: &mut R) -> DMatrix<T> {
            DMatrix::from_fn(r, c, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
        }
        loop {
            let a: DMatrix<T> = normal(n, n, rng);
            let b = normal(n, m, rng);
            let c = normal(p, n, rng);
            let d = if with_feedthrough { normal(p, m, rng) } else { DMatrix::zeros(p, m) };
            let radius = a
                .complex_eigenvalues()
                .iter()
                .fold(T::zero(), |acc, z| acc.max((z.re * z.re + z.im * z.im).sqrt()));
            if radius <= T::lit(1e-6) {
                continue;
            }
            let target = T::lit(0.3 + 0.65 * rng.random::<f64>());
            let a = a * (target / radius);
            if let Ok(sys) = Self::new(a, b, c, d) {
                return sys;
            }
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: SystemDocument = serde_json::from_str(s)?;
        doc.into_system()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_document(&self) -> SystemDocument {
        SystemDocument {
            a: matrix_to_rows(&self.a),
            b: matrix_to_rows(&self.b),
            c: matrix_to_rows(&self.c),
            d: Some(matrix_to_rows(&self.d)),
        }
    }
}

pub(crate) fn uniform_matrix<T: Scalar, R: Rng>(
    rows: usize,
    cols: usize,
    amplitude: T,
    rng: &mut R,
) -> DMatrix<T> {
    let amp = amplitude.as_f64().abs();
    // column-major fill keeps the draw order equal to the time order
    DMatrix::from_fn(rows, cols, |_, _| T::lit(rng.random_range(-amp..=amp)))
}

/// JSON form of a system: row-major nested arrays under keys `A`, `B`, `C`, `D`.
/// A missing `D` means zero feedthrough.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDocument {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
}

impl SystemDocument {
    pub fn into_system<T: Scalar>(self) -> Result<LtiSystem<T>> {
        let a = matrix_from_rows::<T>(&self.a)?;
        let b = matrix_from_rows::<T>(&self.b)?;
        let c = matrix_from_rows::<T>(&self.c)?;
        let d = match &self.d {
            Some(rows) => matrix_from_rows::<T>(rows)?,
            None => DMatrix::zeros(c.nrows(), b.ncols()),
        };
        LtiSystem::new(a, b, c, d)
    }
}

/// The third-order single-input single-output example plant used by the
/// reference experiment.
pub fn reference_plant<T: Scalar>() -> LtiSystem<T> {
    let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<_>>();
    let a = DMatrix::from_row_slice(
        3,
        3,
        &lit(&[0.8768, 0.4147, 0.0678, 0.3934, -0.6436, -0.2961, -0.7907, 0.7055, 0.1587]),
    );
    let b = DMatrix::from_row_slice(3, 1, &lit(&[0.9567, 0.1039, -0.2155]));
    let c = DMatrix::from_row_slice(1, 3, &lit(&[0.4164, -0.7185, -0.9618]));
    let d = DMatrix::zeros(1, 1);
    LtiSystem::new(a, b, c, d).expect("reference plant is minimal")
}
