//! Sampling and analysis of constrained closed polygonal loops in a
//! punctured plane.

pub mod analytics;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod homotopy;
pub mod loops;
pub mod mcmc;
pub mod oracle;
pub mod ratefn;

pub use error::{Error, Result};
pub use geometry::{Point, PunctureSet};
pub use homotopy::{CrossingStructure, CyclicWord, Word};
pub use loops::{ClassSpec, GnParams, PLLoop};
pub use ratefn::RadialRate;
