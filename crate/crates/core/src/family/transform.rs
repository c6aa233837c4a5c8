use serde::{Deserialize, Serialize};

use super::descriptor::{interpolate, FamilyDescriptor};
use super::grid::{Grid1D, GridKind};
use super::potential::{CoverPatch, NodeRange, PotentialFamily};
use crate::error::{Error, Result};
use crate::numerics::{
    eigh, min_singular_value, spectral_projection_with, GeneralMatrix, HermitianMatrix, C64,
};
use crate::tolerances::Tolerances;

/// Default collar width for [`make_constant_ends`], in length units.
pub const DEFAULT_COLLAR: f64 = 1.0;

pub fn rescale(fam: &PotentialFamily, lambda: f64) -> Result<PotentialFamily> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveScale(lambda));
    }
    let mut out = fam.map(|m| m.scale(lambda));
    out.descriptor = fam.descriptor.as_ref().map(|d| FamilyDescriptor::Rescaled {
        base: Box::new(d.clone()),
        factor: lambda,
    });
    Ok(out)
}

/// Collar parameter r in [0, 1] per node: distance to K over the collar width.
fn collar_parameter(fam: &PotentialFamily, width: f64) -> Vec<f64> {
    let g = fam.grid();
    let k = fam.compact();
    (0..fam.len())
        .map(|i| {
            if k.contains(i) {
                return 0.0;
            }
            let d = if k.is_empty() {
                f64::INFINITY
            } else if i < k.start {
                g.x(k.start) - g.x(i)
            } else {
                g.x(i) - g.x(k.end - 1)
            };
            // Guard the r = 1 boundary against rounding in the coordinates.
            let r = d / width;
            if r >= 1.0 - 1e-12 {
                1.0
            } else {
                r.max(0.0)
            }
        })
        .collect()
}

fn patch_is_constant(fam: &PotentialFamily, p: &CoverPatch) -> bool {
    let anchor = fam.matrix(p.anchor);
    p.range.iter().all(|i| fam.matrix(i) == anchor)
}

/// Replaces S by S(x_j) on each V_j beyond a collar of width `collar`,
/// interpolating linearly across the collar. K grows by the collar nodes.
pub fn make_constant_ends(fam: &PotentialFamily, collar: f64) -> Result<PotentialFamily> {
    ends_homotopy(fam, collar, 1.0, true)
}

/// The homotopy H^t from S (t = 0) to the constant-ends family (t = 1):
/// S on K, (1 - t r)S + t r S(x_j) on the collar, (1 - t)S + t S(x_j) beyond.
/// Metadata (K and cover) is kept from the input.
pub fn constant_ends_homotopy(fam: &PotentialFamily, collar: f64, t: f64) -> Result<PotentialFamily> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Family(format!("homotopy parameter {t} outside [0, 1]")));
    }
    ends_homotopy(fam, collar, t, false)
}

fn ends_homotopy(
    fam: &PotentialFamily,
    collar: f64,
    t: f64,
    shrink_cover: bool,
) -> Result<PotentialFamily> {
    if fam.grid().kind() != GridKind::Line {
        return Err(Error::Geometry("constant ends need a line grid".into()));
    }
    if !(collar > 0.0) {
        return Err(Error::Geometry(format!("collar width must be positive, got {collar}")));
    }
    let r = collar_parameter(fam, collar);
    let mut matrices = fam.matrices().to_vec();
    let mut cover = Vec::with_capacity(fam.cover().len());
    let mut compact = fam.compact();
    for (j, p) in fam.cover().iter().enumerate() {
        if patch_is_constant(fam, p) {
            cover.push(p.clone());
            continue;
        }
        let flat: Vec<usize> = p.range.iter().filter(|&i| r[i] >= 1.0).collect();
        if flat.is_empty() {
            return Err(Error::Geometry(format!(
                "collar of width {collar} is wider than cover patch {j}"
            )));
        }
        let flat_range = NodeRange::new(flat[0], flat[flat.len() - 1] + 1);
        if flat_range.len() != flat.len() || !flat_range.contains(p.anchor) {
            return Err(Error::Geometry(format!(
                "cover patch {j} is not an outer end of the line"
            )));
        }
        let sj = fam.matrix(p.anchor).clone();
        for i in p.range.iter() {
            let w = t * r[i];
            matrices[i] = if w >= 1.0 {
                sj.clone()
            } else if w == 0.0 {
                matrices[i].clone()
            } else {
                matrices[i].combine(1.0 - w, &sj, w)
            };
        }
        if shrink_cover {
            // Collar nodes join K.
            if flat_range.start > p.range.start {
                compact = NodeRange::new(compact.start.min(p.range.start), compact.end.max(flat_range.start));
            } else if flat_range.end < p.range.end {
                compact = NodeRange::new(compact.start.min(flat_range.end), compact.end.max(p.range.end));
            }
            cover.push(CoverPatch {
                range: flat_range,
                anchor: p.anchor,
                bound: p.bound,
            });
        } else {
            cover.push(p.clone());
        }
    }
    let mut out = PotentialFamily::new(fam.grid().clone(), matrices, compact, cover)?;
    out.blocks = fam.blocks.clone();
    Ok(out)
}

/// Whether each cover patch is exactly constant.
pub fn has_constant_ends(fam: &PotentialFamily) -> bool {
    fam.cover().iter().all(|p| patch_is_constant(fam, p))
}

#[derive(Debug, Clone)]
pub struct SmoothedFamily {
    pub family: PotentialFamily,
    /// max_i ||S'_{i+1} - S'_i|| / h.
    pub derivative_bound: f64,
    /// max over nodes of ||(S' - S)(S + i)^-1||; equal to the (S - i) value.
    pub kato_rellich: f64,
}

/// Entrywise convolution with a normalized truncated Gaussian
/// (σ = width/2, support ±width), renormalized near line ends.
/// Nodes whose whole window is bitwise constant are left unchanged.
pub fn smooth_family(fam: &PotentialFamily, width: f64) -> Result<SmoothedFamily> {
    let g = fam.grid();
    let h = g.h();
    if !(width >= 2.0 * h * (1.0 - 1e-12)) {
        return Err(Error::Family(format!(
            "smoothing width {width} below twice the spacing {h}"
        )));
    }
    let n = fam.len();
    let dim = fam.dim();
    let m = (width / h + 1e-9).floor() as isize;
    let sigma = width / 2.0;
    let weights: Vec<f64> = (-m..=m)
        .map(|k| {
            let d = k as f64 * h;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let circle = g.kind() == GridKind::Circle;
    let index = |i: usize, k: isize| -> Option<usize> {
        let j = i as isize + k;
        if circle {
            Some(j.rem_euclid(n as isize) as usize)
        } else if j >= 0 && (j as usize) < n {
            Some(j as usize)
        } else {
            None
        }
    };

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let window: Vec<(usize, f64)> = (-m..=m)
            .zip(&weights)
            .filter_map(|(k, &w)| index(i, k).map(|j| (j, w)))
            .collect();
        let si = fam.matrix(i);
        if window.iter().all(|&(j, _)| fam.matrix(j) == si) {
            out.push(si.clone());
            continue;
        }
        let total: f64 = window.iter().map(|&(_, w)| w).sum();
        let mut acc = GeneralMatrix::zeros(dim, dim);
        for &(j, w) in &window {
            let sj = fam.general(j);
            let c = w / total;
            for col in 0..dim {
                for row in 0..dim {
                    acc.add_at(row, col, sj.get(row, col) * c);
                }
            }
        }
        out.push(HermitianMatrix::symmetrized(acc));
    }

    let mut kato = 0.0f64;
    for i in 0..n {
        let diff = out[i].sub(fam.matrix(i));
        if diff.as_general().max_abs() == 0.0 {
            continue;
        }
        // ||X (S + i)^-1|| computed from the eigensystem of S.
        let es = eigh(fam.matrix(i))?;
        let v = &es.eigenvectors;
        let d = GeneralMatrix::diag(
            &es.eigenvalues
                .iter()
                .map(|&l| C64::new(1.0, 0.0) / C64::new(l, 1.0))
                .collect::<Vec<_>>(),
        );
        let resolvent = &(v * &d) * &v.adjoint();
        let k = (diff.as_general() * &resolvent).norm();
        if k >= 0.5 {
            return Err(Error::SmoothingTooCoarse { node: i, measured: k });
        }
        kato = kato.max(k);
    }

    let steps = if circle { n } else { n - 1 };
    let derivative_bound = (0..steps)
        .map(|i| out[(i + 1) % n].sub(&out[i]).norm() / h)
        .fold(0.0, f64::max);

    let mut family = PotentialFamily::new(g.clone(), out, fam.compact(), fam.cover().to_vec())?;
    if let Some(b) = &fam.blocks {
        family = family.with_blocks(b.clone())?;
    }
    Ok(SmoothedFamily {
        family,
        derivative_bound,
        kato_rellich: kato,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trivialisation {
    /// A₀ = P_[-1,1](S(x₀)).
    pub projection: HermitianMatrix,
    /// The perturbation 2A₀.
    pub perturbation: HermitianMatrix,
    /// Maximal contiguous range around x₀ on which S(x) + 2A₀ has min σ above the threshold.
    pub valid_range: NodeRange,
}

pub fn trivialising_perturbation(fam: &PotentialFamily, node: usize) -> Result<Trivialisation> {
    trivialising_perturbation_with(fam, node, &Tolerances::DEFAULT)
}

pub fn trivialising_perturbation_with(
    fam: &PotentialFamily,
    node: usize,
    tol: &Tolerances,
) -> Result<Trivialisation> {
    if node >= fam.len() {
        return Err(Error::Family(format!("node {node} out of range")));
    }
    let projection = spectral_projection_with(fam.matrix(node), -1.0, 1.0, tol.boundary_cut)?;
    let perturbation = projection.scale(2.0);
    let ok = |i: usize| -> Result<bool> {
        Ok(min_singular_value(fam.matrix(i).add(&perturbation).as_general())? > tol.trivialising_gap)
    };
    if !ok(node)? {
        return Ok(Trivialisation {
            projection,
            perturbation,
            valid_range: NodeRange::new(node, node),
        });
    }
    let mut lo = node;
    while lo > 0 && ok(lo - 1)? {
        lo -= 1;
    }
    let mut hi = node + 1;
    while hi < fam.len() && ok(hi)? {
        hi += 1;
    }
    Ok(Trivialisation {
        projection,
        perturbation,
        valid_range: NodeRange::new(lo, hi),
    })
}

/// The family on a grid of spacing close to `h` over the same extent.
///
/// Families built from a descriptor are re-evaluated exactly; others are
/// interpolated linearly (bitwise-constant stretches stay bitwise constant).
/// K and the cover are carried over by coordinates.
pub fn resample(fam: &PotentialFamily, h: f64) -> Result<PotentialFamily> {
    let old = fam.grid();
    let grid = old.respaced(h)?;
    let matrices: Vec<HermitianMatrix> = match &fam.descriptor {
        Some(d) => {
            let e = d.compile()?;
            (0..grid.len()).map(|i| e.eval(grid.x(i))).collect()
        }
        None => (0..grid.len())
            .map(|i| interpolate_at(fam, grid.x(i)))
            .collect(),
    };
    let (compact, cover) = map_metadata(fam, &grid);
    let mut out = PotentialFamily::new(grid, matrices, compact, cover)?;
    if let Some(b) = &fam.blocks {
        out = out.with_blocks(b.clone())?;
    }
    Ok(out.with_descriptor(fam.descriptor.clone()))
}

fn interpolate_at(fam: &PotentialFamily, x: f64) -> HermitianMatrix {
    let g = fam.grid();
    let n = fam.len();
    let circle = g.kind() == GridKind::Circle;
    let t = (x - g.start()) / g.h();
    if !circle {
        if t <= 0.0 {
            return fam.matrix(0).clone();
        }
        if t >= (n - 1) as f64 {
            return fam.matrix(n - 1).clone();
        }
    }
    let i = t.floor() as usize;
    let frac = t - i as f64;
    let a = fam.matrix(i % n);
    let b = fam.matrix((i + 1) % n);
    if frac < 1e-9 {
        return a.clone();
    }
    if frac > 1.0 - 1e-9 {
        return b.clone();
    }
    interpolate(a, b, frac)
}

fn map_metadata(fam: &PotentialFamily, grid: &Grid1D) -> (NodeRange, Vec<CoverPatch>) {
    let old = fam.grid();
    if grid.kind() == GridKind::Circle {
        return (NodeRange::new(0, grid.len()), vec![]);
    }
    // K absorbs every new node strictly between the outer patches.
    let k = fam.compact();
    let eps = 1e-9 * old.h();
    let lo = if k.start == 0 { f64::NEG_INFINITY } else { old.x(k.start - 1) + eps };
    let hi = if k.end >= old.len() { f64::INFINITY } else { old.x(k.end) - eps };
    let compact = grid.range_within(lo.max(grid.start() - 1.0), hi.min(grid.end() + 1.0));
    let n = grid.len();
    let mut cover: Vec<CoverPatch> = vec![];
    for p in fam.cover() {
        let (a, b) = (old.x(p.range.start), old.x(p.range.end - 1));
        cover.push(CoverPatch {
            range: grid.range_within(a, b),
            anchor: grid.nearest(old.x(p.anchor)),
            bound: p.bound,
        });
    }
    // Repair overlaps and gaps so that K and the patches tile the nodes.
    let mut owner = vec![None::<usize>; n];
    for (j, p) in cover.iter().enumerate() {
        for i in p.range.iter() {
            if !compact.contains(i) && owner[i].is_none() {
                owner[i] = Some(j);
            }
        }
    }
    for i in 0..n {
        if compact.contains(i) || owner[i].is_some() {
            continue;
        }
        let nearest = cover
            .iter()
            .enumerate()
            .min_by(|(_, p), (_, q)| {
                let dp = range_distance(p.range, i);
                let dq = range_distance(q.range, i);
                dp.cmp(&dq)
            })
            .map(|(j, _)| j);
        owner[i] = nearest;
    }
    let mut repaired = vec![];
    for (j, p) in cover.iter().enumerate() {
        let nodes: Vec<usize> = (0..n).filter(|&i| owner[i] == Some(j)).collect();
        if nodes.is_empty() {
            continue;
        }
        let range = NodeRange::new(nodes[0], nodes[nodes.len() - 1] + 1);
        let anchor = p.anchor.clamp(range.start, range.end - 1);
        repaired.push(CoverPatch {
            range,
            anchor,
            bound: p.bound,
        });
    }
    (compact, repaired)
}

fn range_distance(r: NodeRange, i: usize) -> usize {
    if r.contains(i) {
        0
    } else if i < r.start {
        r.start - i
    } else {
        i + 1 - r.end
    }
}
