//! Numerical thresholds shared by every engine.
//!
//! All acceptance thresholds live here so that a run configuration can
//! override them in one place and result documents can embed the values
//! actually used.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max |H - H*| entry accepted (and symmetrized away) for Hermitian input.
    pub hermitian: f64,
    /// Eigenpair residual scale: ||Hv - lv|| <= eigen_residual * (1 + |l|).
    pub eigen_residual: f64,
    pub orthonormality: f64,
    /// Relative reconstruction error of A = U S V*.
    pub svd_reconstruction: f64,
    /// Minimal distance between an eigenvalue and a spectral cut.
    pub boundary_cut: f64,
    /// Singular-value gap certificate for kernel detection.
    pub gap_ratio: f64,
    /// Kernel threshold ceiling, relative to ||T||.
    pub kernel_ceiling: f64,
    /// Interior weights of near-null vectors must avoid (band, 1 - band).
    pub localization_band: f64,
    pub branch_overlap: f64,
    pub max_refinement_depth: usize,
    pub endpoint_invertibility: f64,
    /// Eigenvalues below this magnitude count as sitting on zero.
    pub zero_eigenvalue: f64,
    pub grading: f64,
    pub parametrix_off_support: f64,
    /// Relative singular-value cutoff for the numerical rank of residuals.
    pub residual_rank: f64,
    pub block_structure: f64,
    /// Smallest singular value accepted for an anchor matrix S(x_j).
    pub singular: f64,
    /// Minimal singular value of S(x) + 2 A0 on a trivialising range.
    pub trivialising_gap: f64,
    /// Default cylinder rule: L_cyl >= cylinder_factor / c.
    pub cylinder_factor: f64,
    /// Equality tolerance for "constant" ends (relative to the end norm).
    pub end_constancy: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-12,
        eigen_residual: 1e-9,
        orthonormality: 1e-10,
        svd_reconstruction: 1e-9,
        boundary_cut: 1e-8,
        gap_ratio: 100.0,
        kernel_ceiling: 1e-3,
        localization_band: 0.1,
        branch_overlap: 0.75,
        max_refinement_depth: 20,
        endpoint_invertibility: 1e-6,
        zero_eigenvalue: 1e-12,
        grading: 1e-10,
        parametrix_off_support: 1e-8,
        residual_rank: 1e-8,
        block_structure: 1e-12,
        singular: 1e-10,
        trivialising_gap: 0.1,
        cylinder_factor: 12.0,
        end_constancy: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
