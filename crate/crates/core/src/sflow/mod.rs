//! Spectral flow of a potential family: branch tracking with adaptive
//! refinement, and an independent partition count.

mod flow;
mod matching;

pub use flow::{
    spectral_flow_circle, spectral_flow_circle_with, spectral_flow_crossing,
    spectral_flow_crossing_with, spectral_flow_partition, spectral_flow_partition_with, Crossing,
    SpectralFlowReport, TracePoint,
};
pub use matching::{greedy_assignment, match_branches, max_weight_assignment};

#[cfg(test)]
mod tests;
