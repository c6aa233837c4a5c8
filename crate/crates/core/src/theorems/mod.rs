//! Executable checks of the index identities over seeded family ensembles.
//!
//! Each check returns a [`TheoremCheckResult`] listing every instance with
//! its seed. Instances whose hypotheses fail are set aside as inadmissible
//! and do not count against the identity.

mod check;
mod ensemble;
mod glue;

pub use check::{
    certified_index, check_cylinder_replacement, check_cylinder_replacement_ensemble,
    check_flow_oracles, check_graded_vanishing, check_graded_vanishing_family,
    check_homotopy_ensemble, check_homotopy_invariance, check_index_equals_sf,
    check_index_equals_sf_family, check_relative_index, check_relative_index_ensemble,
    check_rescaling, check_rescaling_ensemble, FlowRecord, IndexRecord, InstanceFailure,
    InstanceValues, TheoremCheckResult, TheoremId, Verdict, HOMOTOPY_TIMES,
};
pub(crate) use check::hypothesis_error;
pub use ensemble::{instance_seed, EnsembleKind, EnsembleSpec, Instance};
pub use glue::{check_collars, matched_partner, swap_at_collars, GlueSpec};

#[cfg(test)]
mod tests;
