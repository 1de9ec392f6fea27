//! Exact arithmetic over ℚ(i) and the linear-algebra kernels built on it.

pub mod matrix;
pub mod scalar;
pub mod sparse;

pub use matrix::{
    complexify_vec, hermitian_inertia, hermitian_pair, hermitian_signature, nullspace, realify,
    realify_antilinear, realify_vec, rref, Inertia, LinalgError, Matrix, SignaturePair,
};
pub use scalar::{parse_rational, rat, rat_int, rat_to_string, GaussianRational, Rational, GR};
pub use sparse::{canonical_basis, SpanDecoder, SparseSolver, SparseVec};
