use serde::{Deserialize, Serialize};

use super::descriptor::FamilyDescriptor;
use super::grid::{Grid1D, GridKind};
use crate::error::{Error, Result};
use crate::numerics::{GeneralMatrix, HermitianMatrix};
use crate::tolerances::Tolerances;

/// Half-open node range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRange {
    pub start: usize,
    pub end: usize,
}

impl NodeRange {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "NodeRange start {start} > end {end}");
        NodeRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }

    pub fn iter(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub(crate) fn shifted(&self, by: usize) -> NodeRange {
        NodeRange::new(self.start + by, self.end + by)
    }
}

/// One member V_j of the cover of the nodes outside K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverPatch {
    pub range: NodeRange,
    /// Anchor node x_j; the matrix S(x_j) is the patch's reference.
    pub anchor: usize,
    /// Declared bound a_j in (0, 1); `None` means "use the measured value".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

/// Node-indexed Hermitian family S(x) with its compact set and cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialFamily {
    pub(crate) grid: Grid1D,
    pub(crate) matrices: Vec<HermitianMatrix>,
    pub(crate) compact: NodeRange,
    pub(crate) cover: Vec<CoverPatch>,
    /// Sizes of contiguous diagonal blocks, one per point of the base Y.
    pub(crate) blocks: Option<Vec<usize>>,
    /// Formula the samples came from, when exact re-evaluation is possible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub(crate) descriptor: Option<FamilyDescriptor>,
}

impl PotentialFamily {
    pub fn new(
        grid: Grid1D,
        matrices: Vec<HermitianMatrix>,
        compact: NodeRange,
        cover: Vec<CoverPatch>,
    ) -> Result<Self> {
        let fam = PotentialFamily {
            grid,
            matrices,
            compact,
            cover,
            blocks: None,
            descriptor: None,
        };
        fam.validate()?;
        Ok(fam)
    }

    /// Samples `f` on the grid with the default layout for `compact` (see [`default_cover`]).
    pub fn from_fn(
        grid: Grid1D,
        compact: NodeRange,
        mut f: impl FnMut(f64) -> HermitianMatrix,
    ) -> Result<Self> {
        let matrices = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        let cover = default_cover(&grid, compact);
        Self::new(grid, matrices, compact, cover)
    }

    pub fn with_blocks(mut self, sizes: Vec<usize>) -> Result<Self> {
        self.blocks = Some(sizes);
        self.validate()?;
        Ok(self)
    }

    pub fn with_bounds(mut self, bounds: &[Option<f64>]) -> Result<Self> {
        if bounds.len() != self.cover.len() {
            return Err(Error::Family(format!(
                "{} bounds for {} cover patches",
                bounds.len(),
                self.cover.len()
            )));
        }
        for (p, b) in self.cover.iter_mut().zip(bounds) {
            p.bound = *b;
        }
        self.validate()?;
        Ok(self)
    }

    /// Moves the anchor of each cover patch to the node nearest x_j.
    pub fn with_anchors(mut self, xs: &[f64]) -> Result<Self> {
        if xs.len() != self.cover.len() {
            return Err(Error::Family(format!(
                "{} anchors for {} cover patches",
                xs.len(),
                self.cover.len()
            )));
        }
        for (j, (p, &x)) in self.cover.iter_mut().zip(xs).enumerate() {
            let i = self.grid.nearest(x);
            if !p.range.contains(i) {
                return Err(Error::CoverViolation {
                    patch: j,
                    reason: format!("anchor x_j = {x} lies outside the patch"),
                });
            }
            p.anchor = i;
        }
        self.validate()?;
        Ok(self)
    }

    pub(crate) fn with_descriptor(mut self, d: Option<FamilyDescriptor>) -> Self {
        self.descriptor = d;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn matrices(&self) -> &[HermitianMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &HermitianMatrix {
        &self.matrices[i]
    }

    pub fn compact(&self) -> NodeRange {
        self.compact
    }

    pub fn cover(&self) -> &[CoverPatch] {
        &self.cover
    }

    pub fn blocks(&self) -> Option<&[usize]> {
        self.blocks.as_deref()
    }

    pub fn descriptor(&self) -> Option<&FamilyDescriptor> {
        self.descriptor.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, HermitianMatrix::dim)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Largest spectral norm over the nodes.
    pub fn max_norm(&self) -> f64 {
        self.matrices
            .iter()
            .map(HermitianMatrix::norm)
            .fold(0.0, f64::max)
    }

    /// Block sizes, treating an unblocked family as a single block.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.clone().unwrap_or_else(|| vec![self.dim()])
    }

    pub fn block_count(&self) -> usize {
        self.blocks.as_ref().map_or(1, Vec::len)
    }

    /// The sub-family on block `b` (metadata kept, blocks dropped).
    pub fn block(&self, b: usize) -> Result<PotentialFamily> {
        let sizes = self.block_sizes();
        if b >= sizes.len() {
            return Err(Error::Family(format!("no block {b}")));
        }
        let start: usize = sizes[..b].iter().sum();
        Ok(PotentialFamily {
            grid: self.grid.clone(),
            matrices: self
                .matrices
                .iter()
                .map(|m| m.principal_block(start, sizes[b]))
                .collect(),
            compact: self.compact,
            cover: self.cover.clone(),
            blocks: None,
            descriptor: None,
        })
    }

    /// Same samples with the block structure forgotten.
    pub fn without_blocks(&self) -> PotentialFamily {
        PotentialFamily {
            blocks: None,
            descriptor: None,
            ..self.clone()
        }
    }

    /// Block-diagonal direct sum over a common grid, K and cover.
    pub fn direct_sum(parts: &[PotentialFamily]) -> Result<PotentialFamily> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Family("direct sum of nothing".into()))?;
        for p in parts {
            if p.grid != first.grid || p.compact != first.compact || p.cover != first.cover {
                return Err(Error::Family(
                    "direct-sum parts must share grid, compact set and cover".into(),
                ));
            }
        }
        let matrices = (0..first.len())
            .map(|i| {
                let blocks: Vec<HermitianMatrix> =
                    parts.iter().map(|p| p.matrices[i].clone()).collect();
                HermitianMatrix::direct_sum(&blocks)
            })
            .collect();
        let mut sizes = vec![];
        for p in parts {
            sizes.extend(p.block_sizes());
        }
        let fam = PotentialFamily {
            grid: first.grid.clone(),
            matrices,
            compact: first.compact,
            cover: first.cover.clone(),
            blocks: Some(sizes),
            descriptor: None,
        };
        fam.validate()?;
        Ok(fam)
    }

    /// Same family with the nodes in reverse order (x -> -x).
    pub fn reversed(&self) -> PotentialFamily {
        let n = self.len();
        let flip = |r: NodeRange| NodeRange::new(n - r.end, n - r.start);
        let grid = self.grid.with_origin(-self.grid.end());
        PotentialFamily {
            grid,
            matrices: self.matrices.iter().rev().cloned().collect(),
            compact: flip(self.compact),
            cover: self
                .cover
                .iter()
                .rev()
                .map(|p| CoverPatch {
                    range: flip(p.range),
                    anchor: n - 1 - p.anchor,
                    bound: p.bound,
                })
                .collect(),
            blocks: self.blocks.clone(),
            descriptor: None,
        }
    }

    /// Pointwise map, metadata kept. The map must preserve block structure.
    pub fn map(&self, f: impl Fn(&HermitianMatrix) -> HermitianMatrix) -> PotentialFamily {
        PotentialFamily {
            matrices: self.matrices.iter().map(f).collect(),
            descriptor: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if self.matrices.len() != n {
            return Err(Error::Family(format!(
                "{} matrices for {} nodes",
                self.matrices.len(),
                n
            )));
        }
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::Family("matrices must have positive dimension".into()));
        }
        if let Some(i) = self.matrices.iter().position(|m| m.dim() != dim) {
            return Err(Error::Family(format!(
                "matrix at node {i} has dimension {} instead of {dim}",
                self.matrices[i].dim()
            )));
        }
        if self.compact.end > n {
            return Err(Error::Family("compact set exceeds grid".into()));
        }
        let mut owner = vec![usize::MAX; n];
        for i in self.compact.iter() {
            owner[i] = 0;
        }
        for (j, p) in self.cover.iter().enumerate() {
            if p.range.end > n || p.range.is_empty() {
                return Err(Error::CoverViolation {
                    patch: j,
                    reason: "empty or out-of-grid range".into(),
                });
            }
            if !p.range.contains(p.anchor) {
                return Err(Error::CoverViolation {
                    patch: j,
                    reason: format!("anchor {} outside its range", p.anchor),
                });
            }
            if let Some(a) = p.bound {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::CoverViolation {
                        patch: j,
                        reason: format!("a_j must lie in (0,1), got {a}"),
                    });
                }
            }
            for i in p.range.iter() {
                if owner[i] != usize::MAX {
                    return Err(Error::CoverViolation {
                        patch: j,
                        reason: format!("node {i} overlaps K or another patch"),
                    });
                }
                owner[i] = j + 1;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::CoverViolation {
                patch: self.cover.len(),
                reason: format!("node {i} lies neither in K nor in any patch"),
            });
        }
        if let Some(sizes) = &self.blocks {
            if sizes.iter().sum::<usize>() != dim || sizes.contains(&0) {
                return Err(Error::Family(format!(
                    "block sizes {sizes:?} do not partition dimension {dim}"
                )));
            }
            let tol = Tolerances::DEFAULT.block_structure;
            for (i, m) in self.matrices.iter().enumerate() {
                let off = m.off_block_max(sizes);
                if off > tol {
                    return Err(Error::Family(format!(
                        "matrix at node {i} is not block diagonal (off-block entry {off:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Entry-by-entry comparison of the samples only.
    pub fn same_samples(&self, other: &PotentialFamily) -> bool {
        self.grid == other.grid && self.matrices == other.matrices
    }

    pub(crate) fn general(&self, i: usize) -> &GeneralMatrix {
        self.matrices[i].as_general()
    }
}

/// Cover of the nodes outside `compact` on a line: left patch anchored at
/// node 0 and right patch anchored at the last node. Circles get none.
pub fn default_cover(grid: &Grid1D, compact: NodeRange) -> Vec<CoverPatch> {
    if grid.kind() == GridKind::Circle {
        return vec![];
    }
    let n = grid.len();
    let mut cover = vec![];
    if compact.start > 0 {
        cover.push(CoverPatch {
            range: NodeRange::new(0, compact.start),
            anchor: 0,
            bound: None,
        });
    }
    if compact.end < n {
        cover.push(CoverPatch {
            range: NodeRange::new(compact.end, n),
            anchor: n - 1,
            bound: None,
        });
    }
    cover
}
