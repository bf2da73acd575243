//! DeGroot opinion dynamics on influence networks, plus recovery of each
//! individual's hidden resistance to influence from observed opinion
//! trajectories.
//!
//! The model: opinions update as `x(t+1) = W x(t)` with a row-stochastic
//! weight matrix `W` whose diagonal `d_ii` is each individual's self-weight
//! (resistance). What is observable in practice is the zero-diagonal matrix
//! `C` of relative interpersonal weights, related to `W` by
//! `W = (I - D) C + D`. Given `C` and a trajectory, the diagonal is
//! identified per node and time step by
//!
//! ```text
//! d_ii = 1 - (x_i(t+1) - x_i(t)) / (s_i(t) - x_i(t)),    s_i(t) = sum_{j != i} c_ij x_j(t)
//! ```
//!
//! provided the denominator is nonzero. The recovered values are invariant
//! under any positive affine rescaling of the opinion scale.
//!
//! Modules:
//! - [`matrix`] — influence matrices, resistance profiles, coupled weights
//! - [`dynamics`] — opinion states, trajectories, simulation, consensus
//! - [`estimator`] — resistance recovery with diagnostics
//! - [`synth`] — seeded generators for networks, profiles, opinions, noise
//! - [`io`] — text formats for networks, trajectories, reports, run configs

pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod io;
pub mod matrix;
mod storage;
pub mod synth;

pub use dynamics::{
    consensus_preservation_check, consensus_value, hull_check, left_perron_vector,
    opinion_difference, rescale, simulate, step, step_factored, ConsensusCheck, HullReport,
    HullViolation, OpinionState, Simulation, StopReason, StopRule, Trajectory,
};
pub use error::{Error, Result};
pub use estimator::{
    estimate_ego, estimate_single, estimate_static, estimate_time_varying, reconstruct_weights,
    social_term, EstimateStatus, EstimationReport, NodeDispersion, NodeEstimate, ReportBody,
    TimeEstimate,
};
pub use matrix::{
    check_structure, compose_weights, decompose_weights, CoupledWeights, InfluenceMatrix,
    ResistanceProfile, StructureReport,
};
pub use synth::{
    derive_seed, gen_network, gen_opinions, gen_resistance, perturb, GeneratorSpec, NetworkKind,
    OpinionDist, WeightScheme,
};
