//! Fredholm index of truncated operators from certified kernel counts,
//! truncation ladders and the graded (symmetry-forced) case.

mod graded;
mod kernel;
mod study;

use serde::{Deserialize, Serialize};

pub use graded::{
    assemble_graded, doubled_family, graded_convergence_study, graded_index, graded_index_with, graded_symbol, grading,
    GradedIndexReport,
};
pub use kernel::{
    fredholm_index, fredholm_index_with, interior_mask, kernel_threshold, IndexReport, KernelCount,
};
pub use study::{
    convergence_study, convergence_study_with, default_ladder, default_spacing, index_at,
    is_converged, prepare_rung, Rung, DEFAULT_H_CAP,
};

/// One rung of a convergence ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrailEntry {
    pub h: f64,
    pub cylinder_length: f64,
    pub grid_size: usize,
    pub index: Vec<i64>,
    pub gap_ratio: f64,
}
