//! Classical video frame interpolation built on asymmetric bilateral motion
//! estimation.
//!
//! The pipeline runs in four stages:
//!
//! 1. symmetric bilateral motion search between the two input frames
//!    ([`estimator::estimate_symmetric`]),
//! 2. occlusion-aware anchor frame synthesis ([`estimator::build_anchor`]),
//! 3. independent per-direction refinement from the anchor towards each
//!    input, weighted by a reliability map ([`estimator::refine_asymmetric`]),
//! 4. dynamic local convolution over four warped candidates
//!    ([`synthesis::apply_dlc`]).
//!
//! Every stage is a pure function over [`Frame`], [`MotionField`] and
//! [`Mask`] values. Row-parallel kernels produce bit-identical output
//! regardless of the rayon pool they run on.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod metrics;
pub mod motion;
pub mod raster;
pub mod synthesis;
pub mod warp;

pub use error::{Error, Result};
pub use estimator::{BilateralResult, CostKind, SearchParams, SymmetricGrid};
pub use raster::{BorderMode, Frame, Mask, MotionField, Pyramid};
pub use synthesis::{FilterParams, Method};
