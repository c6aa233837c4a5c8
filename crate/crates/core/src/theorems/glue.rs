use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{CoverPatch, GridKind, NodeRange, PotentialFamily};
use crate::numerics::{min_singular_value, HermitianMatrix};
use crate::tolerances::Tolerances;

/// Matched collars: node ranges of equal length on which the two families
/// carry identical matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlueSpec {
    pub collar1: NodeRange,
    pub collar2: NodeRange,
}

/// Checks the collar precondition: line grids, equal spacing, equal
/// collar lengths, bitwise equal matrices, invertible S on the collar.
pub fn check_collars(
    fam1: &PotentialFamily,
    fam2: &PotentialFamily,
    glue: &GlueSpec,
    tol: &Tolerances,
) -> Result<()> {
    let (c1, c2) = (glue.collar1, glue.collar2);
    for f in [fam1, fam2] {
        if f.grid().kind() != GridKind::Line {
            return Err(Error::CollarMismatch("gluing needs line families".into()));
        }
    }
    let (h1, h2) = (fam1.grid().h(), fam2.grid().h());
    if (h1 - h2).abs() > 1e-12 * h1.max(h2) {
        return Err(Error::CollarMismatch(format!("spacings differ: {h1} vs {h2}")));
    }
    if fam1.dim() != fam2.dim() || fam1.blocks() != fam2.blocks() {
        return Err(Error::CollarMismatch("fiber dimensions or blocks differ".into()));
    }
    if c1.len() != c2.len() || c1.is_empty() {
        return Err(Error::CollarMismatch(format!(
            "collar lengths {} and {} must be equal and positive",
            c1.len(),
            c2.len()
        )));
    }
    if c1.end > fam1.len() || c2.end > fam2.len() {
        return Err(Error::CollarMismatch("collar exceeds its family".into()));
    }
    for (k, (i, j)) in c1.iter().zip(c2.iter()).enumerate() {
        if fam1.matrix(i) != fam2.matrix(j) {
            return Err(Error::CollarMismatch(format!(
                "collar node {k} differs (nodes {i} and {j})"
            )));
        }
        let sigma = min_singular_value(fam1.matrix(i).as_general())?;
        if !(sigma > tol.singular * fam1.matrix(i).norm().max(1.0)) {
            return Err(Error::CollarMismatch(format!(
                "S is singular on the collar at node {i} (min singular value {sigma:.3e})"
            )));
        }
    }
    Ok(())
}

/// Nodes `[0, cut_left)` of `left` followed by nodes `[cut_right, ..)` of
/// `right`. The outer cover patches of each piece are kept; everything
/// between them is K.
fn join(
    left: &PotentialFamily,
    cut_left: usize,
    right: &PotentialFamily,
    cut_right: usize,
) -> Result<PotentialFamily> {
    let outer_left = left
        .cover()
        .iter()
        .find(|p| p.range.start == 0 && p.range.end <= cut_left)
        .ok_or_else(|| Error::CollarMismatch("left piece has no end patch before the collar".into()))?;
    let outer_right = right
        .cover()
        .iter()
        .find(|p| p.range.end == right.len() && p.range.start >= cut_right)
        .ok_or_else(|| Error::CollarMismatch("right piece has no end patch after the collar".into()))?;
    let shift = |i: usize| i - cut_right + cut_left;
    let mut matrices: Vec<HermitianMatrix> = left.matrices()[..cut_left].to_vec();
    matrices.extend_from_slice(&right.matrices()[cut_right..]);
    let len = matrices.len();
    let right_patch = CoverPatch {
        range: NodeRange::new(shift(outer_right.range.start), shift(outer_right.range.end)),
        anchor: shift(outer_right.anchor),
        bound: outer_right.bound,
    };
    let compact = NodeRange::new(outer_left.range.end, right_patch.range.start);
    let mut fam = PotentialFamily::new(
        left.grid().slice(0, len),
        matrices,
        compact,
        vec![outer_left.clone(), right_patch],
    )?;
    if let Some(b) = left.blocks() {
        fam = fam.with_blocks(b.to_vec())?;
    }
    Ok(fam)
}

/// M³ = Ū¹ ∪ V̄² and M⁴ = Ū² ∪ V̄¹: the parts of each family up to the end
/// of its collar, continued by the other family beyond its collar.
pub fn swap_at_collars(
    fam1: &PotentialFamily,
    fam2: &PotentialFamily,
    glue: &GlueSpec,
    tol: &Tolerances,
) -> Result<(PotentialFamily, PotentialFamily)> {
    check_collars(fam1, fam2, glue, tol)?;
    let m3 = join(fam1, glue.collar1.end, fam2, glue.collar2.end)?;
    let m4 = join(fam2, glue.collar2.end, fam1, glue.collar1.end)?;
    Ok((m3, m4))
}

/// Builds a partner for `fam1` sharing a collar of `width` nodes.
///
/// The collar of `fam1` is the window in `candidates` (start nodes) with the
/// best-conditioned S, tried in a seeded order; `base` receives a copy of it
/// starting at `start2`, blended linearly into its own values over `ramp`
/// nodes on each side.
pub fn matched_partner(
    fam1: &PotentialFamily,
    base: &PotentialFamily,
    width: usize,
    ramp: usize,
    seed: u64,
) -> Result<(PotentialFamily, GlueSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = ramp;
    let hi = fam1.compact().end.saturating_sub(width + ramp);
    let first = fam1.compact().start.max(lo);
    if hi <= first {
        return Err(Error::Geometry("family too short for a collar".into()));
    }
    let mut starts: Vec<usize> = (first..hi).collect();
    starts.shuffle(&mut rng);
    let window_sigma = |s: usize| -> Result<f64> {
        (s..s + width).try_fold(f64::INFINITY, |m, i| {
            Ok(m.min(min_singular_value(fam1.matrix(i).as_general())?))
        })
    };
    let mut best = (f64::NEG_INFINITY, starts[0]);
    for &s in &starts {
        let sigma = window_sigma(s)?;
        if sigma > best.0 {
            best = (sigma, s);
        }
        if sigma >= 0.2 {
            break;
        }
    }
    let start1 = best.1;
    let first2 = base.compact().start + ramp;
    let last2 = base.compact().end.saturating_sub(width + ramp);
    if last2 <= first2 {
        return Err(Error::Geometry("partner too short for a collar".into()));
    }
    let start2 = rng.random_range(first2..last2);
    let mut matrices = base.matrices().to_vec();
    let lo2 = start2 - ramp;
    let hi2 = start2 + width + ramp;
    for j in lo2..hi2 {
        let k = j + start1 - start2;
        if k >= fam1.len() {
            continue;
        }
        let outside = if j < start2 {
            start2 - j
        } else if j >= start2 + width {
            j + 1 - (start2 + width)
        } else {
            0
        };
        matrices[j] = if outside == 0 {
            fam1.matrix(k).clone()
        } else {
            let phi = 1.0 - outside as f64 / (ramp + 1) as f64;
            base.matrix(j).combine(1.0 - phi, fam1.matrix(k), phi)
        };
    }
    let mut fam2 =
        PotentialFamily::new(base.grid().clone(), matrices, base.compact(), base.cover().to_vec())?;
    if let Some(b) = base.blocks() {
        fam2 = fam2.with_blocks(b.to_vec())?;
    }
    let glue = GlueSpec {
        collar1: NodeRange::new(start1, start1 + width),
        collar2: NodeRange::new(start2, start2 + width),
    };
    Ok((fam2, glue))
}
