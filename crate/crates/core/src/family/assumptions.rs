use serde::{Deserialize, Serialize};

use super::potential::PotentialFamily;
use crate::error::{Error, Result};
use crate::numerics::{inverse, min_singular_value, GeneralMatrix};
use crate::tolerances::Tolerances;

/// Certificates for one cover patch V_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchBound {
    pub patch: usize,
    pub anchor: usize,
    pub declared: Option<f64>,
    /// sup over V_j of ||(S(x) - S(x_j)) S(x_j)^-1||.
    pub measured: f64,
    /// Node attaining `measured`.
    pub witness: usize,
    /// ||S(x_j)^-1|| / (1 - a_j), the implied sup ||S(x)^-1|| on V_j.
    pub neumann_bound: Option<f64>,
    /// Measured sup ||S(x)^-1|| on V_j, for comparison with the bound.
    pub sup_inverse_norm: f64,
    /// sup ||S(x) S(x_j)^-1|| (at most 1 + a_j).
    pub graph_upper: f64,
    /// sup ||S(x_j) S(x)^-1|| (at most 1/(1 - a_j)).
    pub graph_lower: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionFlags {
    pub common_domain: bool,
    pub continuity: bool,
    pub invertible_outside_compact: bool,
    pub cover_bounds: bool,
}

impl AssumptionFlags {
    pub fn all(&self) -> bool {
        self.common_domain && self.continuity && self.invertible_outside_compact && self.cover_bounds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// max ||S(x_{i+1}) - S(x_i)|| over adjacent nodes.
    pub a2_modulus: f64,
    /// min over nodes outside K of the smallest singular value; `None` if K is everything.
    pub a3_min_sigma_outside_k: Option<f64>,
    pub a4_bounds: Vec<PatchBound>,
    pub pass: AssumptionFlags,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.pass.all()
    }
}

pub fn verify_assumptions(fam: &PotentialFamily) -> Result<AssumptionReport> {
    verify_assumptions_with(fam, &Tolerances::DEFAULT)
}

pub fn verify_assumptions_with(fam: &PotentialFamily, tol: &Tolerances) -> Result<AssumptionReport> {
    fam.validate()?;
    if fam.block_count() > 1 {
        let parts = (0..fam.block_count())
            .map(|b| verify_single(&fam.block(b)?, tol))
            .collect::<Result<Vec<_>>>()?;
        return Ok(merge(parts));
    }
    verify_single(fam, tol)
}

fn merge(parts: Vec<AssumptionReport>) -> AssumptionReport {
    let mut it = parts.into_iter();
    let mut out = it.next().expect("at least one block");
    for r in it {
        out.a2_modulus = out.a2_modulus.max(r.a2_modulus);
        out.a3_min_sigma_outside_k = match (out.a3_min_sigma_outside_k, r.a3_min_sigma_outside_k) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        for (p, q) in out.a4_bounds.iter_mut().zip(r.a4_bounds) {
            if q.measured > p.measured {
                p.measured = q.measured;
                p.witness = q.witness;
            }
            p.neumann_bound = match (p.neumann_bound, q.neumann_bound) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
            p.sup_inverse_norm = p.sup_inverse_norm.max(q.sup_inverse_norm);
            p.graph_upper = p.graph_upper.max(q.graph_upper);
            p.graph_lower = p.graph_lower.max(q.graph_lower);
            p.pass &= q.pass;
        }
        out.pass.common_domain &= r.pass.common_domain;
        out.pass.continuity &= r.pass.continuity;
        out.pass.invertible_outside_compact &= r.pass.invertible_outside_compact;
        out.pass.cover_bounds &= r.pass.cover_bounds;
    }
    out
}

fn spectral_norm(m: &GeneralMatrix) -> f64 {
    m.norm()
}

/// A power of two bringing the largest component of `m` into [1, 2).
/// Scaling by it is exact, so ratios computed after normalization do not
/// depend on a power-of-two rescaling of the family.
fn normalizer(m: &GeneralMatrix) -> f64 {
    let mut big = 0.0f64;
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            let z = m.get(i, j);
            big = big.max(z.re.abs()).max(z.im.abs());
        }
    }
    if big == 0.0 || !big.is_finite() {
        return 1.0;
    }
    let exp = ((big.to_bits() >> 52) & 0x7ff) as i32 - 1023;
    2f64.powi(-exp)
}

fn verify_single(fam: &PotentialFamily, tol: &Tolerances) -> Result<AssumptionReport> {
    let n = fam.len();
    let a2_modulus = (1..n)
        .map(|i| spectral_norm(&(fam.general(i) - fam.general(i - 1))))
        .fold(0.0, f64::max);

    let compact = fam.compact();
    let mut a3: Option<f64> = None;
    let mut sigma = vec![f64::NAN; n];
    for i in (0..n).filter(|&i| !compact.contains(i)) {
        let s = min_singular_value(fam.general(i))?;
        sigma[i] = s;
        a3 = Some(a3.map_or(s, |m: f64| m.min(s)));
    }
    let singular_floor = |i: usize| tol.singular * fam.general(i).max_abs().max(f64::MIN_POSITIVE);

    let mut bounds = Vec::with_capacity(fam.cover().len());
    for (j, patch) in fam.cover().iter().enumerate() {
        let sj = fam.general(patch.anchor);
        let anchor_sigma = sigma[patch.anchor];
        let anchor_ok = anchor_sigma > singular_floor(patch.anchor);
        if !anchor_ok {
            if patch.bound.is_some() {
                return Err(Error::CoverViolation {
                    patch: j,
                    reason: format!(
                        "S(x_j) at node {} is singular (min singular value {anchor_sigma:.3e})",
                        patch.anchor
                    ),
                });
            }
            bounds.push(PatchBound {
                patch: j,
                anchor: patch.anchor,
                declared: None,
                measured: f64::INFINITY,
                witness: patch.anchor,
                neumann_bound: None,
                sup_inverse_norm: f64::INFINITY,
                graph_upper: f64::INFINITY,
                graph_lower: f64::INFINITY,
                pass: false,
            });
            continue;
        }
        let scale = normalizer(sj);
        let sj = &sj.scale(scale);
        let sj_inv = inverse(sj)?;
        let mut measured = 0.0f64;
        let mut witness = patch.anchor;
        let mut sup_inv = 0.0f64;
        let mut upper = 0.0f64;
        let mut lower = 0.0f64;
        for i in patch.range.iter() {
            let si = &fam.general(i).scale(scale);
            let rel = spectral_norm(&(&(si - sj) * &sj_inv));
            if rel > measured {
                measured = rel;
                witness = i;
            }
            upper = upper.max(spectral_norm(&(si * &sj_inv)));
            if sigma[i] > singular_floor(i) {
                sup_inv = sup_inv.max(1.0 / sigma[i]);
                lower = lower.max(spectral_norm(&(sj * &inverse(si)?)));
            } else {
                sup_inv = f64::INFINITY;
                lower = f64::INFINITY;
            }
        }
        let a = patch.bound.unwrap_or(measured);
        let pass = measured < 1.0 && patch.bound.is_none_or(|d| measured <= d);
        let neumann_bound = (a < 1.0).then(|| (1.0 / anchor_sigma) / (1.0 - a));
        bounds.push(PatchBound {
            patch: j,
            anchor: patch.anchor,
            declared: patch.bound,
            measured,
            witness,
            neumann_bound,
            sup_inverse_norm: sup_inv,
            graph_upper: upper,
            graph_lower: lower,
            pass,
        });
    }

    let pass = AssumptionFlags {
        common_domain: true,
        continuity: a2_modulus.is_finite(),
        invertible_outside_compact: match a3 {
            None => true,
            Some(s) => s > tol.singular * fam.max_norm().max(f64::MIN_POSITIVE),
        },
        cover_bounds: bounds.iter().all(|b| b.pass),
    };
    Ok(AssumptionReport {
        a2_modulus,
        a3_min_sigma_outside_k: a3,
        a4_bounds: bounds,
        pass,
    })
}
