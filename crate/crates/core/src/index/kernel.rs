use serde::{Deserialize, Serialize};

use super::TrailEntry;
use crate::discretize::{AssembledOperator, Boundary};
use crate::error::{Error, Result};
use crate::numerics::{eigh, svd, GeneralMatrix, HermitianMatrix, C64};
use crate::tolerances::Tolerances;

/// Kernel count for one fiber block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCount {
    pub dim_ker: usize,
    pub dim_coker: usize,
    /// Singular values below the threshold, before localization.
    pub near_null: usize,
    pub threshold: f64,
    /// Smallest rejected singular value over the largest accepted one.
    pub gap_ratio: f64,
    pub min_singular: f64,
    /// Smallest singular value above the threshold.
    pub gap_singular: f64,
    /// Interior weights of the near-null right and left singular vectors.
    pub ker_weights: Vec<f64>,
    pub coker_weights: Vec<f64>,
    /// max ‖T* u‖ over accepted left singular vectors u.
    pub coker_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub dim_ker: usize,
    pub dim_coker: usize,
    /// One entry per block.
    pub index: Vec<i64>,
    /// Largest threshold over the blocks.
    pub threshold: f64,
    /// Smallest certificate over the blocks.
    pub gap_ratio: f64,
    pub converged: bool,
    pub trail: Vec<TrailEntry>,
    pub blocks: Vec<KernelCount>,
}

impl IndexReport {
    pub fn total(&self) -> i64 {
        self.index.iter().sum()
    }
}

/// Index of a truncated operator, block by block.
///
/// A square truncation has index 0 as a matrix, so the near-null space
/// (singular values below τ) is split by where it lives: right singular
/// vectors concentrated away from the truncated ends span the kernel, left
/// singular vectors concentrated there span the cokernel. The modes pinned
/// to the cut ends are the truncation's bookkeeping and are discarded.
pub fn fredholm_index(op: &AssembledOperator) -> Result<IndexReport> {
    fredholm_index_with(op, &Tolerances::DEFAULT)
}

pub fn fredholm_index_with(op: &AssembledOperator, tol: &Tolerances) -> Result<IndexReport> {
    let sizes = op.block_sizes();
    let counts = if sizes.len() == 1 {
        vec![count_kernel(op, tol)?]
    } else {
        (0..sizes.len())
            .map(|b| count_kernel(&op.block_operator(b)?, tol))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(IndexReport {
        dim_ker: counts.iter().map(|c| c.dim_ker).sum(),
        dim_coker: counts.iter().map(|c| c.dim_coker).sum(),
        index: counts
            .iter()
            .map(|c| c.dim_ker as i64 - c.dim_coker as i64)
            .collect(),
        threshold: counts.iter().map(|c| c.threshold).fold(0.0, f64::max),
        gap_ratio: counts.iter().map(|c| c.gap_ratio).fold(f64::INFINITY, f64::min),
        converged: false,
        trail: vec![],
        blocks: counts,
    })
}

/// τ and the number of singular values below it.
///
/// Values below `kernel_ceiling · ‖T‖` are candidates; τ is the geometric
/// mean of the pair with the largest multiplicative gap among them (the
/// first value at or above the ceiling closes the last pair).
pub fn kernel_threshold(sigma_ascending: &[f64], norm: f64, tol: &Tolerances) -> Result<(f64, usize, f64)> {
    let dim = sigma_ascending.len();
    let floor = f64::EPSILON * norm.max(f64::MIN_POSITIVE) * dim.max(1) as f64;
    let ceiling = tol.kernel_ceiling * norm;
    let k = sigma_ascending.iter().take_while(|&&s| s < ceiling).count();
    if k == 0 {
        let smallest = sigma_ascending.first().copied().unwrap_or(f64::INFINITY);
        let tau = (smallest * floor).sqrt().min(ceiling);
        return Ok((tau, 0, smallest / floor));
    }
    let mut best = (0.0f64, 0usize);
    for i in 0..k {
        let lo = sigma_ascending[i].max(floor);
        let hi = sigma_ascending.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let r = hi / lo;
        if r > best.0 {
            best = (r, i);
        }
    }
    let (ratio, i) = best;
    if ratio < tol.gap_ratio {
        return Err(Error::AmbiguousKernel {
            best_ratio: ratio,
            required: tol.gap_ratio,
        });
    }
    let lo = sigma_ascending[i].max(floor);
    let tau = match sigma_ascending.get(i + 1) {
        Some(&hi) => (lo * hi).sqrt(),
        None => ceiling,
    };
    Ok((tau, i + 1, ratio))
}

/// Node weights of the interior region: everything except the outer half
/// of each recorded end margin (the outer eighth of the line when no
/// margin was recorded). Circles have no ends.
pub fn interior_mask(op: &AssembledOperator) -> Vec<bool> {
    let nodes = op.nodes();
    if op.boundary == Boundary::Periodic {
        return vec![true; nodes];
    }
    let g = &op.grid;
    let [ml, mr] = g.end_margins();
    let span = g.end() - g.start();
    let left = if ml > 0.0 { ml / 2.0 } else { span / 8.0 };
    let right = if mr > 0.0 { mr / 2.0 } else { span / 8.0 };
    let (lo, hi) = (g.start() + left, g.end() - right);
    (0..nodes).map(|i| (lo..=hi).contains(&g.x(i))).collect()
}

/// Eigenvalues of W* Π W for the columns W, ascending.
fn interior_weights(w: &GeneralMatrix, mask: &[bool], n: usize) -> Result<Vec<f64>> {
    let k = w.cols();
    if k == 0 {
        return Ok(vec![]);
    }
    let rows: Vec<usize> = (0..w.rows()).filter(|&r| mask[r / n]).collect();
    let part = w.submatrix(&rows, &(0..k).collect::<Vec<_>>());
    let gram = &part.adjoint() * &part;
    let h = HermitianMatrix::with_tolerance(gram, 1e-8)?;
    Ok(eigh(&h)?.eigenvalues)
}

fn classify(weights: &[f64], tol: &Tolerances) -> Result<usize> {
    let band = tol.localization_band;
    for &w in weights {
        if w > band && w < 1.0 - band {
            return Err(Error::AmbiguousLocalization { weight: w });
        }
    }
    Ok(weights.iter().filter(|&&w| w > 0.5).count())
}

pub(crate) fn count_kernel(op: &AssembledOperator, tol: &Tolerances) -> Result<KernelCount> {
    let dec = svd(&op.t)?;
    let mut sigma = dec.singular_values.clone();
    sigma.reverse();
    let norm = sigma.last().copied().unwrap_or(0.0);
    let (threshold, near, gap_ratio) = kernel_threshold(&sigma, norm, tol)?;
    let size = op.size();
    let cols: Vec<usize> = (size - near..size).collect();
    let v = dec.v.select_columns(&cols);
    let u = dec.u.select_columns(&cols);

    // Self-check of the cokernel candidates against the stored adjoint.
    let mut coker_residual = 0.0f64;
    for c in 0..near {
        let col = u.column(c);
        let r = op.t_adj.mat_vec(&col);
        coker_residual = coker_residual.max(r.iter().map(C64::norm_sqr).sum::<f64>().sqrt());
    }
    if coker_residual > threshold {
        return Err(Error::Convergence(format!(
            "cokernel candidate has ‖T* u‖ = {coker_residual:.3e} above τ = {threshold:.3e}"
        )));
    }

    let mask = interior_mask(op);
    let n = op.fiber_dim;
    let ker_weights = interior_weights(&v, &mask, n)?;
    let coker_weights = interior_weights(&u, &mask, n)?;
    Ok(KernelCount {
        dim_ker: classify(&ker_weights, tol)?,
        dim_coker: classify(&coker_weights, tol)?,
        near_null: near,
        threshold,
        gap_ratio,
        min_singular: sigma.first().copied().unwrap_or(0.0),
        gap_singular: sigma.get(near).copied().unwrap_or(f64::INFINITY),
        ker_weights,
        coker_weights,
        coker_residual,
    })
}
