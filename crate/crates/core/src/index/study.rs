use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{fredholm_index_with, IndexReport};
use super::TrailEntry;
use crate::discretize::{
    assemble_dirac_schrodinger, attach_cylinder_ends_with, default_cylinder_length, Boundary, Scheme,
};
use crate::error::{Error, Result};
use crate::family::{has_constant_ends, make_constant_ends, resample, PotentialFamily, DEFAULT_COLLAR};
use crate::numerics::min_singular_value;
use crate::tolerances::Tolerances;

/// One rung: grid spacing and cylinder length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub h: f64,
    pub cylinder_length: f64,
}

impl From<(f64, f64)> for Rung {
    fn from((h, cylinder_length): (f64, f64)) -> Self {
        Rung { h, cylinder_length }
    }
}

/// Spacing cap used by [`default_ladder`] when none is given.
pub const DEFAULT_H_CAP: f64 = 0.25;

/// Base spacing: min(h_cap, 0.8 / max‖S‖), which keeps ‖hS‖ well below 2
/// (the lattice model loses its index beyond that).
pub fn default_spacing(fam: &PotentialFamily, h_cap: f64) -> f64 {
    let m = fam.max_norm();
    if m > 0.0 {
        h_cap.min(0.8 / m)
    } else {
        h_cap
    }
}

/// [(1.5h, L), (1.25h, 1.25L), (h, 1.5L)] with h from [`default_spacing`]
/// and L from the cylinder rule.
pub fn default_ladder(fam: &PotentialFamily, h_cap: f64, tol: &Tolerances) -> Result<Vec<Rung>> {
    let h = default_spacing(fam, h_cap);
    let l = default_cylinder_length(fam, tol)?;
    Ok(vec![
        Rung { h: 1.5 * h, cylinder_length: l },
        Rung { h: 1.25 * h, cylinder_length: 1.25 * l },
        Rung { h, cylinder_length: 1.5 * l },
    ])
}

/// The family prepared for one rung: resampled, constant ends, cylinders.
pub fn prepare_rung(fam: &PotentialFamily, rung: Rung, tol: &Tolerances) -> Result<PotentialFamily> {
    let mut f = resample(fam, rung.h)?;
    if !has_constant_ends(&f) {
        f = make_constant_ends(&f, DEFAULT_COLLAR)?;
    }
    check_ends(&f, tol)?;
    attach_cylinder_ends_with(&f, rung.cylinder_length, tol)
}

/// The cylinder models must be invertible, or no truncation is meaningful.
fn check_ends(fam: &PotentialFamily, tol: &Tolerances) -> Result<()> {
    let floor = tol.singular * fam.max_norm().max(1.0);
    for node in [0, fam.len() - 1] {
        let sigma = min_singular_value(fam.matrix(node).as_general())?;
        if !(sigma > floor) {
            return Err(Error::EndpointNotInvertible { node, sigma });
        }
    }
    Ok(())
}

pub fn index_at(fam: &PotentialFamily, rung: Rung, tol: &Tolerances) -> Result<(IndexReport, usize)> {
    let f = prepare_rung(fam, rung, tol)?;
    let op = assemble_dirac_schrodinger(&f, Scheme::Upwind, Boundary::Dirichlet)?;
    Ok((fredholm_index_with(&op, tol)?, f.len()))
}

pub fn convergence_study(fam: &PotentialFamily, ladder: &[Rung]) -> Result<IndexReport> {
    convergence_study_with(fam, ladder, &Tolerances::DEFAULT)
}

/// Runs [`index_at`] along the ladder. With three or more rungs the last
/// three must agree with certified gaps, otherwise the trail is returned
/// as an error.
pub fn convergence_study_with(
    fam: &PotentialFamily,
    ladder: &[Rung],
    tol: &Tolerances,
) -> Result<IndexReport> {
    run_ladder(ladder, tol, |r| index_at(fam, r, tol))
}

pub(crate) fn check_ladder(ladder: &[Rung]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::LadderOrder);
    }
    for w in ladder.windows(2) {
        let ok = w[1].h <= w[0].h
            && w[1].cylinder_length >= w[0].cylinder_length
            && (w[1].h < w[0].h || w[1].cylinder_length > w[0].cylinder_length);
        if !ok {
            return Err(Error::LadderOrder);
        }
    }
    Ok(())
}

/// Runs one index computation per rung (in parallel) and merges them in
/// ladder order into the report of the finest rung.
pub(crate) fn run_ladder<F>(ladder: &[Rung], tol: &Tolerances, run: F) -> Result<IndexReport>
where
    F: Fn(Rung) -> Result<(IndexReport, usize)> + Sync,
{
    check_ladder(ladder)?;
    let runs: Vec<(IndexReport, usize)> = ladder
        .par_iter()
        .map(|&r| run(r))
        .collect::<Result<Vec<_>>>()?;
    let trail: Vec<TrailEntry> = ladder
        .iter()
        .zip(&runs)
        .map(|(r, (rep, size))| TrailEntry {
            h: r.h,
            cylinder_length: r.cylinder_length,
            grid_size: *size,
            index: rep.index.clone(),
            gap_ratio: rep.gap_ratio,
        })
        .collect();
    let converged = is_converged(&trail, tol);
    if trail.len() >= 3 && !converged {
        return Err(Error::NonConvergence { trail });
    }
    let (mut report, _) = runs.into_iter().last().expect("non-empty ladder");
    report.converged = converged;
    report.trail = trail;
    Ok(report)
}

pub fn is_converged(trail: &[TrailEntry], tol: &Tolerances) -> bool {
    if trail.len() < 3 {
        return false;
    }
    let last = &trail[trail.len() - 3..];
    last.iter().all(|e| e.index == last[0].index && e.gap_ratio >= tol.gap_ratio)
}
