//! Worst-case optimal input design: the robust tracking LMI, conic backends,
//! an exact inner-maximization oracle, and a receding-horizon driver.

mod clarabel_backend;
pub mod lmi;
pub mod multiplier;
pub mod receding;
#[cfg(test)]
mod test_support;
pub mod worst_case;

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use clarabel_backend::ClarabelBackend;
pub use lmi::{assemble_lmi, noise_reduction_basis, AffineLmi, VariableLayout};
pub use multiplier::MultiplierSearch;
pub use receding::{run_receding_horizon, RecedingHorizonConfig, RecedingLog};
pub use worst_case::{maximize_on_unit_ball, worst_case_cost, WorstCase};

use crate::error::{Error, Result};
use crate::io::{vector_from_slice, vector_to_vec};
use crate::linalg;
use crate::noise::NoiseParameterization;
use crate::predictor::{build_qg, lqte, OutputPredictor, TrackingProblem};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Raw output of a conic backend.
#[derive(Debug, Clone)]
pub struct SdpSolution<T: Scalar> {
    pub x: DVector<T>,
    pub status: SolverStatus,
    pub iterations: u32,
    pub detail: String,
}

/// A semidefinite solver that accepts the solver-neutral LMI description.
pub trait SdpBackend<T: Scalar> {
    fn name(&self) -> &'static str;
    fn solve(&self, lmi: &AffineLmi<T>) -> Result<SdpSolution<T>>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Clarabel(ClarabelBackend),
    /// Exact one-dimensional search over the S-lemma multiplier.
    MultiplierSearch(MultiplierSearch),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Clarabel(_) => "clarabel",
            Backend::MultiplierSearch(_) => "multiplier-search",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub backend: Backend,
    /// Minimum eigenvalue the LMI may show at the returned point.
    pub certificate_tol: f64,
    /// Restrict the noise block to the reduced coordinates before solving.
    pub compress: bool,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Clarabel(ClarabelBackend::default()),
            certificate_tol: 1e-7,
            compress: true,
        }
    }
}

impl SynthesisOptions {
    pub fn with_backend(backend: Backend) -> Self {
        Self { backend, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisResult<T: Scalar> {
    pub u_star: DVector<T>,
    pub gamma_star: T,
    /// S-lemma multiplier; `None` when the noise set is a single point and no
    /// finite multiplier certifies the bound.
    pub alpha_star: Option<T>,
    pub status: SolverStatus,
    pub solve_time: f64,
    pub backend: String,
    /// Minimum eigenvalue of the LMI at `(u*, γ*, α*)`.
    pub lmi_min_eigenvalue: Option<T>,
    pub detail: String,
}

impl<T: Scalar> SynthesisResult<T> {
    fn failed(status: SolverStatus, n_inputs: usize, backend: &str, detail: String, started: Instant) -> Self {
        Self {
            u_star: DVector::zeros(n_inputs),
            gamma_star: T::zero(),
            alpha_star: None,
            status,
            solve_time: started.elapsed().as_secs_f64(),
            backend: backend.to_string(),
            lmi_min_eigenvalue: None,
            detail,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }

    /// Converts a non-optimal status into the matching error.
    pub fn into_optimal(self) -> Result<Self> {
        match self.status {
            SolverStatus::Optimal => Ok(self),
            SolverStatus::Infeasible => Err(Error::Infeasible(self.detail)),
            SolverStatus::Unbounded => Err(Error::Unbounded(self.detail)),
            SolverStatus::NumericalFailure => Err(Error::Solver(self.detail)),
        }
    }

    pub fn to_record(&self) -> SynthesisRecord {
        SynthesisRecord {
            u_star: vector_to_vec(&self.u_star),
            gamma_star: self.gamma_star.as_f64(),
            alpha_star: self.alpha_star.map(Scalar::as_f64),
            status: self.status,
            backend: self.backend.clone(),
            lmi_min_eigenvalue: self.lmi_min_eigenvalue.map(Scalar::as_f64),
            detail: self.detail.clone(),
            timings: Timings { solve_seconds: self.solve_time },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub solve_seconds: f64,
}

/// JSON form of a synthesis result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub u_star: Vec<f64>,
    pub gamma_star: f64,
    pub alpha_star: Option<f64>,
    pub status: SolverStatus,
    pub backend: String,
    pub lmi_min_eigenvalue: Option<f64>,
    #[serde(default)]
    pub detail: String,
    pub timings: Timings,
}

impl SynthesisRecord {
    pub fn into_result<T: Scalar>(self) -> SynthesisResult<T> {
        SynthesisResult {
            u_star: vector_from_slice(&self.u_star),
            gamma_star: T::lit(self.gamma_star),
            alpha_star: self.alpha_star.map(T::lit),
            status: self.status,
            solve_time: self.timings.solve_seconds,
            backend: self.backend,
            lmi_min_eigenvalue: self.lmi_min_eigenvalue.map(T::lit),
            detail: self.detail,
        }
    }
}

/// Minimum eigenvalue of `Q_g(u, γ) − α A_w`; non-negative exactly when the
/// multiplier certifies `LQTE ≤ γ` over every admissible noise.
pub fn slemma_margin<T: Scalar>(
    pred: &OutputPredictor<T>,
    prob: &TrackingProblem<T>,
    param: &NoiseParameterization<T>,
    u: &DVector<T>,
    gamma: T,
    alpha: T,
) -> T {
    let m = build_qg(pred, prob, u, gamma) - &param.a_w * alpha;
    linalg::min_eigenvalue(&m)
}

/// Input minimizing the tracking cost for one fixed noise parameter `g_w`,
/// and the resulting cost.
pub fn nominal_optimum<T: Scalar>(
    pred: &OutputPredictor<T>,
    prob: &TrackingProblem<T>,
    g_w: &DVector<T>,
) -> Result<(DVector<T>, T)> {
    let h = lmi::input_hessian(pred, prob)?;
    let free = pred.predict(&DVector::zeros(pred.b_u.ncols()), g_w)? - prob.reference();
    let rhs = pred.b_u.transpose() * prob.q_bar() * free;
    let u = -h
        .cholesky()
        .ok_or(Error::CostNotDefinite { min_eig: 0.0 })?
        .solve(&rhs);
    let y = pred.predict(&u, g_w)?;
    let gamma = lqte(prob, &u, &y);
    Ok((u, gamma))
}

/// Minimizes the worst-case tracking cost over all admissible noise.
pub fn synthesize<T: Scalar>(
    pred: &OutputPredictor<T>,
    prob: &TrackingProblem<T>,
    param: &NoiseParameterization<T>,
    options: &SynthesisOptions,
) -> Result<SynthesisResult<T>> {
    let started = Instant::now();
    let nu = pred.b_u.ncols();
    let backend_name = options.backend.name();
    if param.is_empty() {
        return Ok(SynthesisResult::failed(
            SolverStatus::Infeasible,
            nu,
            backend_name,
            format!(
                "admissible noise set is empty (max constraint value {})",
                param.reduced_set.level()
            ),
            started,
        ));
    }
    if param.reduced_set.is_singleton() {
        let (u_star, gamma_star) = nominal_optimum(pred, prob, &param.center_gw())?;
        return Ok(SynthesisResult {
            u_star,
            gamma_star,
            alpha_star: None,
            status: SolverStatus::Optimal,
            solve_time: started.elapsed().as_secs_f64(),
            backend: backend_name.to_string(),
            lmi_min_eigenvalue: None,
            detail: "noise set is a single point; solved the nominal problem".into(),
        });
    }
    let lmi = assemble_lmi(pred, prob, param)?;
    let layout = lmi.layout;

    let (x, mut status, mut detail) = match &options.backend {
        Backend::Clarabel(backend) => {
            let sol = if options.compress {
                backend.solve(&lmi.congruence(&noise_reduction_basis(nu, param)))?
            } else {
                backend.solve(&lmi)?
            };
            (sol.x, sol.status, format!("{} after {} iterations", sol.detail, sol.iterations))
        }
        Backend::MultiplierSearch(search) => {
            let sol = search.solve(pred, prob, param)?;
            let x = layout.pack(&sol.u, sol.gamma, sol.alpha);
            (x, SolverStatus::Optimal, format!("multiplier {} after {} evaluations", sol.alpha, sol.evaluations))
        }
    };
    if status != SolverStatus::Optimal {
        return Ok(SynthesisResult::failed(status, nu, backend_name, detail, started));
    }

    let (u_star, gamma_star, alpha_raw) = layout.unpack(&x);
    let alpha_star = alpha_raw.max(T::zero());
    let x = layout.pack(&u_star, gamma_star, alpha_star);
    let min_eig = lmi.min_eigenvalue(&x);
    if min_eig < -T::lit(options.certificate_tol) {
        status = SolverStatus::NumericalFailure;
        detail = format!("{detail}; LMI certificate violated (min eigenvalue {min_eig})");
    }
    Ok(SynthesisResult {
        u_star,
        gamma_star,
        alpha_star: Some(alpha_star),
        status,
        solve_time: started.elapsed().as_secs_f64(),
        backend: backend_name.to_string(),
        lmi_min_eigenvalue: Some(min_eig),
        detail,
    })
}
