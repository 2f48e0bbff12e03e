//! Numerical isoperimetry for one-dimensional log-concave-type measures.
//!
//! Potentials and line measures live in [`measure1d`]; exact 1-D profiles and
//! the comparison function `L_Φ` in [`profile`]; Hardy-type capacity criteria
//! and rate functions in [`capacity`]; grid discretisation, semigroups and
//! functional-inequality testers in [`discrete`]; planar candidate sets under
//! product measures in [`product2d`].

pub mod capacity;
pub mod discrete;
pub mod error;
pub mod measure1d;
pub mod numeric;
pub mod product2d;
pub mod profile;

pub use error::{Error, Result};
pub use measure1d::{build_measure, LineMeasure, Potential, PotentialRecipe};
