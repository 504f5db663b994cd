//! Exact rational arithmetic and the linear-algebra primitives built on it.

mod lattice;
mod matrix;
mod rational;

pub use lattice::{column_hnf_basis, hnf_lattice_basis, integer_kernel, primitive_integer_vector};
pub use matrix::{decompose, extend_basis, Decomposition, QMatrix, Rref};
pub use rational::Q;
