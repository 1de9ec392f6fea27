//! Exact bigraded prolongation of 2-nondegenerate CR symbols.
//!
//! All arithmetic is over the Gaussian rationals. The pipeline runs
//! symbol construction, regularity, classification of r=1 symbols,
//! bigraded prolongation and identification of the resulting real form.

pub mod algebra;
pub mod classify;
pub mod identify;
pub mod linalg;
pub mod prolong;
pub mod symbol;
