//! Infinite-volume pressures, magnetizations and critical lines of the
//! quantum REM and GREM with longitudinal (iid or hierarchical) and
//! transversal fields, plus finite-N oracles to check them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod error;
pub mod hull;
pub mod model;
pub mod numeric;
pub mod pressure;
pub mod scalar;
pub mod solve;
pub mod verify;

pub use error::{Error, Result};
pub use hull::{
    build_concave_hull, cut_distribution, freezing_threshold, ConcaveHull, CutDistribution,
};
pub use model::{
    validate, DistributionFn, FieldLaw, HierarchicalOverlap, Longitudinal, ModelSpec, Phase,
    PressureResult, Violation,
};
pub use scalar::{ExtendedReal, RateFunctionHandle};
