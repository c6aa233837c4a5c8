//! Finite truncations of ∂_x + S(x), cylinder ends and the patched parametrix.

mod cylinder;
mod operator;
mod parametrix;

pub use cylinder::{attach_cylinder_ends, attach_cylinder_ends_with, default_cylinder_length};
pub use operator::{
    assemble_dirac_schrodinger, assemble_with_symbol, stencil, AssembledOperator, Boundary, Scheme,
};
pub use parametrix::{build_parametrix, build_parametrix_with, ParametrixBundle};

#[cfg(test)]
mod tests;
