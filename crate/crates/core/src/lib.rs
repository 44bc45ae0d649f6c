//! Streaming covariance sketches (Frequent Directions, Robust Frequent Directions and
//! Dyadic Block Sketching) and the sketched linear-bandit policies built on them.

pub mod bandit;
pub mod dyadic;
pub mod error;
pub mod numerics;
pub mod sketch;
pub mod tolerances;

pub use dyadic::{CovarianceView, DyadicConfig, DyadicSketch, GlobalSketchView, UpdateRule};
pub use error::{Error, Result};
pub use numerics::DenseMatrix;
pub use sketch::{AlphaRule, DenseCovariance, SketchKind, SketchState};
