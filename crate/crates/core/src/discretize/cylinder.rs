use crate::error::{Error, Result};
use crate::family::{verify_assumptions_with, CoverPatch, GridKind, NodeRange, PotentialFamily};
use crate::numerics::min_singular_value;
use crate::tolerances::Tolerances;

fn ends_are_constant(fam: &PotentialFamily, tol: &Tolerances) -> Option<usize> {
    let n = fam.len();
    if n < 2 {
        return None;
    }
    let close = |i: usize, j: usize| {
        let a = fam.matrix(i);
        let d = a.sub(fam.matrix(j)).as_general().max_abs();
        d <= tol.end_constancy * a.as_general().max_abs().max(1.0)
    };
    if !close(0, 1) {
        return Some(0);
    }
    if !close(n - 1, n - 2) {
        return Some(n - 1);
    }
    None
}

/// Extends a line family by ⌈L/h⌉ nodes at each end, repeating the end matrices.
pub fn attach_cylinder_ends(fam: &PotentialFamily, length: f64) -> Result<PotentialFamily> {
    attach_cylinder_ends_with(fam, length, &Tolerances::DEFAULT)
}

pub fn attach_cylinder_ends_with(
    fam: &PotentialFamily,
    length: f64,
    tol: &Tolerances,
) -> Result<PotentialFamily> {
    if fam.grid().kind() != GridKind::Line {
        return Err(Error::Geometry("cylinder ends need a line grid".into()));
    }
    if !(length >= 0.0) || !length.is_finite() {
        return Err(Error::Geometry(format!("cylinder length must be non-negative, got {length}")));
    }
    if length == 0.0 {
        return Ok(fam.clone());
    }
    if let Some(node) = ends_are_constant(fam, tol) {
        return Err(Error::NonConstantEnds { node });
    }
    let h = fam.grid().h();
    let m = (length / h - 1e-9).ceil().max(0.0) as usize;
    if m == 0 {
        return Ok(fam.clone());
    }
    let n = fam.len();
    let mut matrices = Vec::with_capacity(n + 2 * m);
    matrices.extend(std::iter::repeat_n(fam.matrix(0).clone(), m));
    matrices.extend_from_slice(fam.matrices());
    matrices.extend(std::iter::repeat_n(fam.matrix(n - 1).clone(), m));
    let total = n + 2 * m;

    let mut cover: Vec<CoverPatch> = fam
        .cover()
        .iter()
        .map(|p| {
            let mut r = p.range.shifted(m);
            if p.range.start == 0 {
                r.start = 0;
            }
            if p.range.end == n {
                r.end = total;
            }
            CoverPatch {
                range: r,
                anchor: p.anchor + m,
                bound: p.bound,
            }
        })
        .collect();
    if !fam.cover().iter().any(|p| p.range.start == 0) {
        cover.insert(
            0,
            CoverPatch {
                range: NodeRange::new(0, m),
                anchor: 0,
                bound: None,
            },
        );
    }
    if !fam.cover().iter().any(|p| p.range.end == n) {
        cover.push(CoverPatch {
            range: NodeRange::new(n + m, total),
            anchor: total - 1,
            bound: None,
        });
    }
    let out = PotentialFamily {
        grid: fam.grid().extended(m, m),
        matrices,
        compact: fam.compact().shifted(m),
        cover,
        blocks: fam.blocks.clone(),
        descriptor: None,
    };
    out.validate()?;
    Ok(out)
}

/// `cylinder_factor / c`, with c the smallest singular value outside K
/// (or at the two end nodes when K is everything).
pub fn default_cylinder_length(fam: &PotentialFamily, tol: &Tolerances) -> Result<f64> {
    let report = verify_assumptions_with(fam, tol)?;
    let c = match report.a3_min_sigma_outside_k {
        Some(c) => c,
        None => {
            let n = fam.len();
            min_singular_value(fam.matrix(0).as_general())?
                .min(min_singular_value(fam.matrix(n - 1).as_general())?)
        }
    };
    if !(c > tol.singular * fam.max_norm().max(f64::MIN_POSITIVE)) {
        return Err(Error::Geometry(format!(
            "ends are not invertible (smallest singular value {c:.3e})"
        )));
    }
    Ok(tol.cylinder_factor / c)
}
