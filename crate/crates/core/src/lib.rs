//! Low-regret adaptive tomography of an unknown pure qudit state.
//!
//! The learner measures fresh copies with rank-one projectors and pays the
//! infidelity of every projector it plays. It works in epochs on the tangent
//! space of a current base state: symmetric retracted measurement pairs give
//! an exact linear model there, block least squares with a hot-started
//! isotropic design estimate the tangent displacement, a distance-median
//! selector makes the estimate robust, and a retraction moves the base.
//!
//! Modules:
//! - [`geometry`]: pure states, tangent vectors, projection and retraction.
//! - [`environment`]: simulated Born-rule measurements and the ground-truth evaluator.
//! - [`estimation`]: design scalar, block accumulators, MoM selection.
//! - [`warmup`]: initial linear-inversion tomography.
//! - [`engine`]: constants, epochs, full runs and their accounting.
//! - [`experiment`]: configuration, batch execution, CSV traces and scaling reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod environment;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod geometry;
pub mod rng;
pub mod warmup;

pub use engine::{derive_constants, run, AlgorithmConstants, Checkpoint, Preset, RunConfig, RunRecord};
pub use environment::{Environment, Evaluator};
pub use error::{Error, Result};
pub use geometry::{PureState, TangentVector};
