//! Agent-based message broadcasting on graphs.
//!
//! A set of `k` agents performs independent synchronous random walks on a
//! connected graph; one agent starts with a message, and agents that meet
//! exchange it. This crate provides:
//!
//! - [`graph`]: road-style graph construction, a plain interchange format,
//!   and edge subdivision that caps edge lengths (`discretize`).
//! - [`process`]: the exact agent-level engine for arbitrary graphs,
//!   including direction-keeping subdivision vertices and the optional
//!   jump-over transmission rule.
//! - [`kn_fast`]: an O(k)/round engine specialized to complete graphs, plus
//!   the phase-chain models (geometric per phase, binomial batch) used as
//!   fast approximations and cross-validation oracles.
//! - [`theory`]: closed-form broadcast-time predictors across the whole
//!   agent-density range, and the standard tail-bound calculators.
//! - [`experiment`]: reproducible Monte Carlo sweeps with deterministic
//!   seeding, summary statistics, and correlation reports.
//!
//! The analytic layer is generic over the floating-point scalar via
//! [`Real`]; the crate root exposes `f64` aliases for the common case.

pub mod experiment;
pub mod graph;
pub mod kn_fast;
pub mod process;
pub mod theory;

/// Floating-point scalar for the analytic layer (predictors, tail bounds,
/// phase-chain math). Implemented by `f32` and `f64`.
pub trait Real: num_traits::Float + num_traits::FromPrimitive + std::fmt::Debug {
    /// Euler–Mascheroni constant.
    fn euler_gamma() -> Self {
        Self::from_f64(0.577_215_664_901_532_9).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Concrete `f64` instantiations of the generic analytic types.
pub type Prediction = theory::RegimePrediction<f64>;
pub type RegimeOptions = theory::RegimeOptions<f64>;

pub use graph::{DiscretizationReport, RoadGraph, VertexKind};
pub use process::{AgentState, BroadcastOutcome, ProcessConfig, RunStatus};
