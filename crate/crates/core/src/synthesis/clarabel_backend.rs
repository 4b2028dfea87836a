//! Interior-point backend: hands the LMI to Clarabel as a PSD-triangle cone.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT,
    SolverStatus as ClarabelStatus, SupportedConeT,
};
use nalgebra::DVector;

use super::lmi::AffineLmi;
use super::{SdpBackend, SdpSolution, SolverStatus};
use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClarabelBackend {
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self { tol_gap_abs: 1e-8, tol_gap_rel: 1e-8, tol_feas: 1e-8, max_iter: 200, verbose: false }
    }
}

impl ClarabelBackend {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { tol_gap_abs: tol, tol_gap_rel: tol, tol_feas: tol, ..Self::default() }
    }
}

/// Column-major upper-triangle `(row, col)` pairs of an `n × n` matrix, the
/// order Clarabel uses for its scaled `svec`.
fn triangle_indices(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(|j| (0..=j).map(move |i| (i, j)))
}

fn map_status(status: ClarabelStatus) -> SolverStatus {
    match status {
        ClarabelStatus::Solved | ClarabelStatus::AlmostSolved => SolverStatus::Optimal,
        ClarabelStatus::PrimalInfeasible | ClarabelStatus::AlmostPrimalInfeasible => SolverStatus::Infeasible,
        ClarabelStatus::DualInfeasible | ClarabelStatus::AlmostDualInfeasible => SolverStatus::Unbounded,
        _ => SolverStatus::NumericalFailure,
    }
}

impl<T: Scalar> SdpBackend<T> for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, lmi: &AffineLmi<T>) -> Result<SdpSolution<T>> {
        let n = lmi.size();
        let nvar = lmi.num_vars();
        let sqrt2 = std::f64::consts::SQRT_2;
        let tri: Vec<(usize, usize)> = triangle_indices(n).collect();
        let n_sign = lmi.nonnegative.len();
        let rows = n_sign + tri.len();

        // s = b − A x with s in (R₊^k × PSD); the LMI reads svec(F0 + Σ x_i F_i) ∈ PSD.
        let mut b = vec![0.0; rows];
        for (r, &(i, j)) in tri.iter().enumerate() {
            let scale = if i == j { 1.0 } else { sqrt2 };
            b[n_sign + r] = lmi.constant[(i, j)].as_f64() * scale;
        }
        let mut colptr = Vec::with_capacity(nvar + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for (v, f) in lmi.coefficients.iter().enumerate() {
            if let Some(k) = lmi.nonnegative.iter().position(|&idx| idx == v) {
                rowval.push(k);
                nzval.push(-1.0);
            }
            for (r, &(i, j)) in tri.iter().enumerate() {
                let val = f[(i, j)].as_f64();
                if val != 0.0 {
                    let scale = if i == j { 1.0 } else { sqrt2 };
                    rowval.push(n_sign + r);
                    nzval.push(-val * scale);
                }
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(rows, nvar, colptr, rowval, nzval);
        let p = CscMatrix::<f64>::zeros((nvar, nvar));
        let q: Vec<f64> = lmi.objective.iter().map(|c| c.as_f64()).collect();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        if n_sign > 0 {
            cones.push(NonnegativeConeT(n_sign));
        }
        cones.push(PSDTriangleConeT(n));

        let settings = DefaultSettingsBuilder::default()
            .verbose(self.verbose)
            .max_iter(self.max_iter)
            .tol_gap_abs(self.tol_gap_abs)
            .tol_gap_rel(self.tol_gap_rel)
            .tol_feas(self.tol_feas)
            .build()
            .map_err(|e| Error::Solver(format!("invalid Clarabel settings: {e}")))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(format!("Clarabel setup failed: {e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        Ok(SdpSolution {
            x: DVector::from_iterator(nvar, sol.x.iter().map(|&v| T::lit(v))),
            status: map_status(sol.status),
            iterations: sol.iterations,
            detail: format!("{:?}", sol.status),
        })
    }
}
