//! Dense Hermitian eigensolver, SVD and matrix functional calculus.
//!
//! Decompositions are backed by `faer`. Matrices whose entries are all real
//! take a real-arithmetic path, which is several times faster and returns
//! the same factorization up to column phases.

mod calculus;
mod decomp;
mod matrix;

pub use calculus::{
    apply_function, apply_to_system, bounded_transform, bounded_transform_scalar, count_in,
    spectral_projection, spectral_projection_with, Normalizer,
};
pub use decomp::{
    eigenvalues, eigh, inverse, min_singular_value, singular_values, svd, EigenSystem, Svd,
};
pub use matrix::{GeneralMatrix, HermitianMatrix, C64};

pub(crate) use matrix::{ONE, ZERO};

#[cfg(test)]
mod tests;
