//! Exact-arithmetic verification of singularity confinement for the
//! Toeplitz-lattice recursions.

pub mod exact;
pub mod series;
pub mod lax;
pub mod gamma;
pub mod flow;
pub mod confine;
pub mod verify;

pub use exact::{MultiPoly, MultiRat, Rational, Ring, VarId};
pub use series::LSeries;
