use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("input is not persistently exciting: {0}")]
    PersistentExcitation(String),

    #[error("initial trajectory is inconsistent with the data (residual {residual:e} > tolerance {tol:e})")]
    InconsistentInitialCondition { residual: f64, tol: f64 },

    #[error("kernel of U_p is trivial, no free noise parameter exists")]
    DegenerateKernel,

    #[error("system is not minimal: {0}")]
    NotMinimal(String),

    #[error("invalid noise model: {0}")]
    NoiseModel(String),

    #[error("invalid tracking cost: {0}")]
    Cost(String),

    #[error("R̄ + B_uᵀQ̄B_u is not positive definite (min eigenvalue {min_eig:e}); use R ≻ 0 or richer output weighting")]
    CostNotDefinite { min_eig: f64 },

    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unbounded: {0}")]
    Unbounded(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
