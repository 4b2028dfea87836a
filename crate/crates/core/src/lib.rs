//! Worst-case optimal tracking control designed directly from input/output
//! data, with a quadratic bound on the noise in the most recent output window.
//!
//! The pipeline: Hankel matrices from a noise-free historical experiment
//! ([`behavioral`]), the set of noise vectors consistent with the recent window
//! ([`noise`]), an affine output predictor ([`predictor`]) and a convex
//! min-max input design ([`synthesis`]).
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases below fix the precision.

pub mod behavioral;
pub mod error;
pub mod io;
pub mod linalg;
pub mod noise;
pub mod plant;
pub mod predictor;
mod scalar;
pub mod synthesis;

pub use behavioral::{
    build_hankel, is_persistently_exciting, is_trajectory, partition, simulate_ddriven, HankelPartition,
    TrajectoryData,
};
pub use error::{Error, Result};
pub use noise::{build_parameterization, Ellipsoid, NoiseModel, NoiseParameterization};
pub use plant::{reference_plant, LtiSystem, SystemDocument};
pub use predictor::{build_predictor, build_qg, lqte, select_rows, OutputPredictor, RowSelection, TrackingProblem};
pub use scalar::Scalar;
pub use synthesis::{
    run_receding_horizon, synthesize, worst_case_cost, Backend, ClarabelBackend, MultiplierSearch,
    RecedingHorizonConfig, RecedingLog, SolverStatus, SynthesisOptions, SynthesisRecord, SynthesisResult, WorstCase,
};

pub type TrajectoryDataF64 = TrajectoryData<f64>;
pub type HankelPartitionF64 = HankelPartition<f64>;
pub type LtiSystemF64 = LtiSystem<f64>;
pub type NoiseModelF64 = NoiseModel<f64>;
pub type NoiseParameterizationF64 = NoiseParameterization<f64>;
pub type TrackingProblemF64 = TrackingProblem<f64>;
pub type OutputPredictorF64 = OutputPredictor<f64>;
pub type SynthesisResultF64 = SynthesisResult<f64>;

pub type TrajectoryDataF32 = TrajectoryData<f32>;
pub type HankelPartitionF32 = HankelPartition<f32>;
pub type LtiSystemF32 = LtiSystem<f32>;
pub type NoiseModelF32 = NoiseModel<f32>;
pub type NoiseParameterizationF32 = NoiseParameterization<f32>;
pub type TrackingProblemF32 = TrackingProblem<f32>;
pub type OutputPredictorF32 = OutputPredictor<f32>;
pub type SynthesisResultF32 = SynthesisResult<f32>;
