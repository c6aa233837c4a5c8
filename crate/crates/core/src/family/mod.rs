//! Grids, potential families S(x) and the transformations applied to them.

mod assumptions;
mod descriptor;
mod grid;
mod io;
mod potential;
mod transform;

pub use assumptions::{
    verify_assumptions, verify_assumptions_with, AssumptionFlags, AssumptionReport, PatchBound,
};
pub use descriptor::{build_family, Evaluator, FamilyDescriptor, Layout, Profile, RandomSmooth};
pub use grid::{Grid1D, GridKind};
pub use io::{load_samples, parse_samples, samples_to_string, save_samples, SampleNode};
pub use potential::{default_cover, CoverPatch, NodeRange, PotentialFamily};
pub use transform::{
    constant_ends_homotopy, has_constant_ends, make_constant_ends, rescale, resample,
    smooth_family, trivialising_perturbation, trivialising_perturbation_with, SmoothedFamily,
    Trivialisation, DEFAULT_COLLAR,
};
