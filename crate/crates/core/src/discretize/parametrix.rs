use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use super::operator::{neighbour, AssembledOperator, Boundary};
use crate::error::{Error, Result};
use crate::family::{has_constant_ends, PotentialFamily};
use crate::numerics::{eigh, inverse, min_singular_value, singular_values, svd, GeneralMatrix, C64, ONE};
use crate::tolerances::Tolerances;

/// Patched inverse Q of T and its residuals.
#[derive(Debug, Clone)]
pub struct ParametrixBundle {
    pub q: GeneralMatrix,
    /// T·Q − 1.
    pub residual_right: GeneralMatrix,
    /// Q·T − 1.
    pub residual_left: GeneralMatrix,
    /// χ_j on the nodes; entry 0 is the core cutoff. Σ_j χ_j² = 1.
    pub partition: Vec<Vec<f64>>,
    /// Ramps plus truncation cuts.
    pub interfaces: usize,
    /// Nodes where the right residual may be nonzero: rows touching dχ or a cut.
    pub support_rows: Vec<usize>,
    /// Largest residual entry more than one stencil width away from `support_rows`.
    pub off_support_max: f64,
    /// Same scan for the left residual, by columns. The core piece is a
    /// right inverse only, so this is usually O(1).
    pub off_support_max_left: f64,
    pub residual_rank: usize,
    /// interfaces · n · stencil width.
    pub rank_bound: usize,
    pub right_norm: f64,
    pub left_norm: f64,
}

pub fn build_parametrix(op: &AssembledOperator, fam: &PotentialFamily) -> Result<ParametrixBundle> {
    build_parametrix_with(op, fam, &Tolerances::DEFAULT)
}

pub fn build_parametrix_with(
    op: &AssembledOperator,
    fam: &PotentialFamily,
    tol: &Tolerances,
) -> Result<ParametrixBundle> {
    if op.nodes() != fam.len() || op.fiber_dim != fam.dim() {
        return Err(Error::Shape("operator and family sizes differ".into()));
    }
    if op.symbol != GeneralMatrix::identity(op.fiber_dim) {
        return Err(Error::Unsupported(
            "parametrix end models need the identity symbol".into(),
        ));
    }
    let nodes = op.nodes();
    let n = op.fiber_dim;
    let constant = fam.matrices().iter().all(|m| m == fam.matrix(0));
    if fam.cover().is_empty() || constant {
        return single_patch(op, tol);
    }
    if !has_constant_ends(fam) {
        let node = fam
            .cover()
            .iter()
            .flat_map(|p| p.range.iter().find(|&i| fam.matrix(i) != fam.matrix(p.anchor)))
            .next()
            .unwrap_or(0);
        return Err(Error::NonConstantEnds { node });
    }

    // Ramps sit in the middle of each end patch.
    let mut partition = vec![vec![1.0; nodes]];
    let mut ends = vec![];
    for (j, p) in fam.cover().iter().enumerate() {
        if p.range.len() < 3 {
            return Err(Error::Geometry(format!(
                "cover patch {j} has {} nodes, the partition ramp needs 3",
                p.range.len()
            )));
        }
        let ramp = p.range.start + p.range.len() / 2;
        let mut chi = vec![0.0; nodes];
        if p.range.start == 0 {
            chi[..ramp].fill(1.0);
        } else if p.range.end == nodes {
            chi[ramp + 1..].fill(1.0);
        } else {
            return Err(Error::Geometry(format!("cover patch {j} does not reach an end of the line")));
        }
        chi[ramp] = FRAC_1_SQRT_2;
        for (c0, c) in partition[0].iter_mut().zip(&chi) {
            *c0 = if *c == 1.0 {
                0.0
            } else if *c == 0.0 {
                *c0
            } else {
                FRAC_1_SQRT_2
            };
        }
        ends.push((j + 1, p.anchor, chi));
    }

    let size = op.size();
    let mut q = GeneralMatrix::zeros(size, size);

    // Core: minimum-norm right inverse of the core rows of T over every
    // column they touch. A square truncation carries an edge-pinned pair
    // with σ ~ |1 − hs|^len; the extra stencil columns absorb it.
    let core: Vec<usize> = (0..nodes).filter(|&i| partition[0][i] != 0.0).collect();
    let (a, b) = (core[0], core[core.len() - 1] + 1);
    let (ca, cb) = touched_columns(op, a, b);
    let rows: Vec<usize> = (a * n..b * n).collect();
    let cols: Vec<usize> = (ca * n..cb * n).collect();
    let t0 = op.t.submatrix(&rows, &cols);
    let floor = tol.singular * op.t.max_abs().max(1.0);
    let dec = svd(&t0)?;
    if dec.singular_values.last().is_none_or(|&s| s <= floor) {
        return Err(Error::InvertibilityFailure { patch: 0 });
    }
    let inv: Vec<C64> = dec.singular_values.iter().map(|&s| C64::new(1.0 / s, 0.0)).collect();
    let r0 = &(&dec.v * &GeneralMatrix::diag(&inv)) * &dec.u.adjoint();
    add_patch(&mut q, &partition[0], n, (ca, cb), (a, b), |i, k| {
        r0.block((i - ca) * n, (k - a) * n, n, n)
    });

    // Ends: Green's function of the constant model on the infinite lattice.
    let h = op.grid.h();
    for (patch, anchor, chi) in ends {
        let green = LatticeGreen::new(fam.matrix(anchor), h, tol, patch)?;
        let support: Vec<usize> = (0..nodes).filter(|&i| chi[i] != 0.0).collect();
        let (a, b) = (support[0], support[support.len() - 1] + 1);
        add_patch(&mut q, &chi, n, (a, b), (a, b), |i, k| green.block(i as isize - k as isize));
        partition.push(chi);
    }

    finish(op, q, partition)
}

fn single_patch(op: &AssembledOperator, tol: &Tolerances) -> Result<ParametrixBundle> {
    let floor = tol.singular * op.t.max_abs().max(1.0);
    if min_singular_value(&op.t)? <= floor {
        return Err(Error::InvertibilityFailure { patch: 0 });
    }
    let q = inverse(&op.t)?;
    finish(op, q, vec![vec![1.0; op.nodes()]])
}

/// Q += χ(i) R(i, k) χ(k) for row nodes i in `rows` and column nodes k in `cols`.
fn add_patch(
    q: &mut GeneralMatrix,
    chi: &[f64],
    n: usize,
    rows: (usize, usize),
    cols: (usize, usize),
    block: impl Fn(usize, usize) -> GeneralMatrix,
) {
    for i in rows.0..rows.1 {
        for k in cols.0..cols.1 {
            let w = chi[i] * chi[k];
            if w == 0.0 {
                continue;
            }
            let blk = block(i, k);
            for r in 0..n {
                for c in 0..n {
                    q.add_at(i * n + r, k * n + c, blk.get(r, c) * w);
                }
            }
        }
    }
}

/// Node range of the nonzero columns in node rows [a, b) of T.
fn touched_columns(op: &AssembledOperator, a: usize, b: usize) -> (usize, usize) {
    let n = op.fiber_dim;
    let (mut lo, mut hi) = (a, b);
    for r in a * n..b * n {
        for c in 0..op.size() {
            if op.t.get(r, c) != C64::new(0.0, 0.0) {
                lo = lo.min(c / n);
                hi = hi.max(c / n + 1);
            }
        }
    }
    (lo, hi)
}

/// G(d) for (D + S)G = δ with D the forward difference: per eigenvalue s
/// with q = 1 − hs, g(d) = h q^{d−1} for d ≥ 1 when |q| < 1 and
/// g(d) = −h q^{d−1} for d ≤ 0 when |q| > 1.
struct LatticeGreen {
    h: f64,
    factors: Vec<f64>,
    projectors: Vec<GeneralMatrix>,
}

impl LatticeGreen {
    fn new(s: &crate::numerics::HermitianMatrix, h: f64, tol: &Tolerances, patch: usize) -> Result<Self> {
        let sys = eigh(s)?;
        let n = sys.dim();
        let mut factors = vec![];
        let mut projectors = vec![];
        for k in 0..n {
            let q = 1.0 - h * sys.eigenvalues[k];
            if (q.abs() - 1.0).abs() <= tol.singular.max(1e-12) {
                return Err(Error::InvertibilityFailure { patch });
            }
            let v = sys.vector(k);
            projectors.push(GeneralMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj()));
            factors.push(q);
        }
        Ok(LatticeGreen {
            h,
            factors,
            projectors,
        })
    }

    fn block(&self, d: isize) -> GeneralMatrix {
        let n = self.projectors[0].rows();
        let mut out = GeneralMatrix::zeros(n, n);
        for (q, p) in self.factors.iter().zip(&self.projectors) {
            let g = if q.abs() < 1.0 {
                if d >= 1 {
                    self.h * q.powi((d - 1) as i32)
                } else {
                    0.0
                }
            } else if d <= 0 {
                -self.h * q.powi((d - 1) as i32)
            } else {
                0.0
            };
            if g != 0.0 {
                out = &out + &p.scale(g);
            }
        }
        out
    }
}

fn finish(
    op: &AssembledOperator,
    q: GeneralMatrix,
    partition: Vec<Vec<f64>>,
) -> Result<ParametrixBundle> {
    let n = op.fiber_dim;
    let nodes = op.nodes();
    let mut residual_right = op.apply_left(&q);
    let mut residual_left = op.apply_right(&q);
    for i in 0..op.size() {
        residual_right.add_at(i, i, -ONE);
        residual_left.add_at(i, i, -ONE);
    }

    let offsets: Vec<isize> = op
        .stencil
        .iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(o, _)| *o)
        .collect();
    let width = offsets.len();
    let single = partition.len() == 1;

    // Row i of T·Q − 1 can be nonzero only where some χ differs across the
    // stencil of row i, or where the stencil of row i is cut by the boundary.
    let (rows, cuts_r) = support(nodes, &offsets, &partition, op.boundary, false);
    let (cols, _) = support(nodes, &offsets, &partition, op.boundary, true);
    let ramps = partition[1..].len();
    let cut_ends = if single { 0 } else { count_ends(&cuts_r, nodes) };
    let interfaces = if single { 0 } else { ramps + cut_ends };

    let near_r = neighbourhood(&rows, width, nodes);
    let near_l = neighbourhood(&cols, width, nodes);
    let (off_r, norm_r_support, rank) = scan(&residual_right, &near_r, n, false);
    let (off_l, norm_l_support, _) = scan(&residual_left, &near_l, n, true);

    Ok(ParametrixBundle {
        q,
        residual_right,
        residual_left,
        partition,
        interfaces,
        support_rows: rows.into_iter().collect(),
        off_support_max: off_r,
        off_support_max_left: off_l,
        residual_rank: rank,
        rank_bound: interfaces * n * width,
        right_norm: norm_r_support.max(off_r),
        left_norm: norm_l_support.max(off_l),
    })
}

fn count_ends(cuts: &BTreeSet<usize>, nodes: usize) -> usize {
    let left = cuts.iter().any(|&i| i < nodes / 2);
    let right = cuts.iter().any(|&i| i >= nodes / 2);
    left as usize + right as usize
}

/// Support nodes of the right residual (rows) or, with `transpose`, of the
/// left residual (columns); the second set holds the cut nodes alone.
fn support(
    nodes: usize,
    offsets: &[isize],
    partition: &[Vec<f64>],
    boundary: Boundary,
    transpose: bool,
) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let mut all = BTreeSet::new();
    let mut cuts = BTreeSet::new();
    let single = partition.len() == 1;
    for i in 0..nodes {
        for &off in offsets {
            let o = if transpose { -off } else { off };
            match neighbour(i, o, nodes, boundary) {
                None => {
                    if !single {
                        cuts.insert(i);
                        all.insert(i);
                    }
                }
                Some(j) => {
                    if partition.iter().any(|chi| chi[i] != chi[j]) {
                        all.insert(i);
                    }
                }
            }
        }
    }
    (all, cuts)
}

fn neighbourhood(support: &BTreeSet<usize>, width: usize, nodes: usize) -> Vec<bool> {
    let mut near = vec![false; nodes];
    for &s in support {
        let lo = s.saturating_sub(width);
        let hi = (s + width).min(nodes - 1);
        near[lo..=hi].fill(true);
    }
    near
}

/// Off-support max entry, spectral norm of the on-support part and its
/// numerical rank (threshold residual_rank · max(1, norm)).
fn scan(r: &GeneralMatrix, near: &[bool], n: usize, by_columns: bool) -> (f64, f64, usize) {
    let size = r.rows();
    let mut off = 0.0f64;
    let mut keep = vec![];
    for node in 0..near.len() {
        let idx = node * n..(node + 1) * n;
        if near[node] {
            keep.extend(idx);
            continue;
        }
        for a in idx {
            for b in 0..size {
                let z: C64 = if by_columns { r.get(b, a) } else { r.get(a, b) };
                off = off.max(z.norm());
            }
        }
    }
    if keep.is_empty() {
        return (off, 0.0, 0);
    }
    let all: Vec<usize> = (0..size).collect();
    let part = if by_columns {
        r.submatrix(&all, &keep)
    } else {
        r.submatrix(&keep, &all)
    };
    let sv = singular_values(&part);
    let norm = sv.first().copied().unwrap_or(0.0);
    let threshold = Tolerances::DEFAULT.residual_rank * norm.max(1.0);
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    (off, norm, rank)
}
