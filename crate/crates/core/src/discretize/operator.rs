use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Grid1D, GridKind, PotentialFamily};
use crate::numerics::{GeneralMatrix, HermitianMatrix, C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Forward difference (ψ_{i+1} - ψ_i)/h.
    #[default]
    Upwind,
    /// Central difference plus (h/2) times the second difference.
    Wilson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

impl Boundary {
    pub fn for_grid(grid: &Grid1D) -> Boundary {
        match grid.kind() {
            GridKind::Line => Boundary::Dirichlet,
            GridKind::Circle => Boundary::Periodic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Periodic => "periodic",
        }
    }
}

/// Derivative stencil as (node offset, coefficient) pairs.
pub fn stencil(scheme: Scheme, h: f64) -> Vec<(isize, f64)> {
    match scheme {
        Scheme::Upwind => vec![(0, -1.0 / h), (1, 1.0 / h)],
        Scheme::Wilson => {
            let c = 1.0 / (2.0 * h);
            let w = 0.5 * h / (h * h);
            vec![(-1, -c + w), (0, -2.0 * w), (1, c + w)]
        }
    }
}

/// T = (∂_x ⊗ σ) + S(x) on the grid, node-major (index i·n + a), with its adjoint.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub t: GeneralMatrix,
    pub t_adj: GeneralMatrix,
    pub grid: Grid1D,
    pub scheme: Scheme,
    pub boundary: Boundary,
    pub fiber_dim: usize,
    /// Principal symbol σ multiplying the derivative (identity by default).
    pub symbol: GeneralMatrix,
    pub potentials: Vec<HermitianMatrix>,
    pub blocks: Option<Vec<usize>>,
    pub stencil: Vec<(isize, f64)>,
}

pub fn assemble_dirac_schrodinger(
    fam: &PotentialFamily,
    scheme: Scheme,
    boundary: Boundary,
) -> Result<AssembledOperator> {
    assemble_with_symbol(fam, &GeneralMatrix::identity(fam.dim()), scheme, boundary)
}

pub fn assemble_with_symbol(
    fam: &PotentialFamily,
    symbol: &GeneralMatrix,
    scheme: Scheme,
    boundary: Boundary,
) -> Result<AssembledOperator> {
    let grid = fam.grid();
    if boundary != Boundary::for_grid(grid) {
        return Err(Error::BoundaryMismatch {
            boundary: boundary.name().into(),
            grid: grid.kind().name().into(),
        });
    }
    let n = fam.dim();
    if symbol.rows() != n || symbol.cols() != n {
        return Err(Error::Shape(format!(
            "symbol is {}x{}, fiber dimension is {n}",
            symbol.rows(),
            symbol.cols()
        )));
    }
    let nodes = grid.len();
    let st = stencil(scheme, grid.h());
    let size = nodes * n;
    let mut t = GeneralMatrix::zeros(size, size);
    for i in 0..nodes {
        for &(off, coef) in &st {
            if coef == 0.0 {
                continue;
            }
            let Some(j) = neighbour(i, off, nodes, boundary) else {
                continue;
            };
            for a in 0..n {
                for b in 0..n {
                    let s = symbol.get(a, b);
                    if s != ZERO {
                        t.add_at(i * n + a, j * n + b, s * coef);
                    }
                }
            }
        }
        let s = fam.general(i);
        for a in 0..n {
            for b in 0..n {
                t.add_at(i * n + a, i * n + b, s.get(a, b));
            }
        }
    }
    let t_adj = t.adjoint();
    Ok(AssembledOperator {
        t,
        t_adj,
        grid: grid.clone(),
        scheme,
        boundary,
        fiber_dim: n,
        symbol: symbol.clone(),
        potentials: fam.matrices().to_vec(),
        blocks: fam.blocks().map(<[usize]>::to_vec),
        stencil: st,
    })
}

#[inline]
pub(crate) fn neighbour(i: usize, off: isize, nodes: usize, boundary: Boundary) -> Option<usize> {
    let j = i as isize + off;
    match boundary {
        Boundary::Periodic => Some(j.rem_euclid(nodes as isize) as usize),
        Boundary::Dirichlet => (j >= 0 && (j as usize) < nodes).then_some(j as usize),
    }
}

impl AssembledOperator {
    pub fn size(&self) -> usize {
        self.t.rows()
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    /// [[0, T*], [T, 0]], built on demand (it is four times the size of T).
    pub fn product_block(&self) -> HermitianMatrix {
        let m = self.size();
        let mut p = GeneralMatrix::zeros(2 * m, 2 * m);
        p.set_block(0, m, &self.t_adj);
        p.set_block(m, 0, &self.t);
        HermitianMatrix::symmetrized(p)
    }

    /// Block sizes, a single block when none are declared.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.clone().unwrap_or_else(|| vec![self.fiber_dim])
    }

    /// Rows/columns of fiber block `b`, in node-major order.
    pub fn block_indices(&self, b: usize) -> Vec<usize> {
        let sizes = self.block_sizes();
        let start: usize = sizes[..b].iter().sum();
        let n = self.fiber_dim;
        (0..self.nodes())
            .flat_map(|i| (start..start + sizes[b]).map(move |a| i * n + a))
            .collect()
    }

    /// The operator restricted to fiber block `b`.
    pub fn block_operator(&self, b: usize) -> Result<AssembledOperator> {
        let sizes = self.block_sizes();
        if b >= sizes.len() {
            return Err(Error::Shape(format!("no block {b}")));
        }
        let start: usize = sizes[..b].iter().sum();
        let len = sizes[b];
        let idx = self.block_indices(b);
        let t = self.t.submatrix(&idx, &idx);
        let local: Vec<usize> = (start..start + len).collect();
        Ok(AssembledOperator {
            t_adj: t.adjoint(),
            t,
            grid: self.grid.clone(),
            scheme: self.scheme,
            boundary: self.boundary,
            fiber_dim: len,
            symbol: self.symbol.submatrix(&local, &local),
            potentials: self
                .potentials
                .iter()
                .map(|p| p.principal_block(start, len))
                .collect(),
            blocks: None,
            stencil: self.stencil.clone(),
        })
    }

    /// Swaps T and T*; the index changes sign.
    pub fn adjoint_operator(&self) -> AssembledOperator {
        AssembledOperator {
            t: self.t_adj.clone(),
            t_adj: self.t.clone(),
            ..self.clone()
        }
    }

    /// Rows and columns `[start, end)` of the node range, as a Dirichlet operator.
    pub fn restrict_nodes(&self, start: usize, end: usize) -> GeneralMatrix {
        let n = self.fiber_dim;
        let idx: Vec<usize> = (start * n..end * n).collect();
        self.t.submatrix(&idx, &idx)
    }

    /// T·X computed from the stencil (X has `size()` rows).
    pub fn apply_left(&self, x: &GeneralMatrix) -> GeneralMatrix {
        self.apply_left_generic(x, false)
    }

    /// X·T computed from the stencil (X has `size()` columns).
    pub fn apply_right(&self, x: &GeneralMatrix) -> GeneralMatrix {
        // X T = (T* X*)*.
        self.apply_left_generic(&x.adjoint(), true).adjoint()
    }

    fn apply_left_generic(&self, x: &GeneralMatrix, adjoint: bool) -> GeneralMatrix {
        let n = self.fiber_dim;
        let nodes = self.nodes();
        let cols = x.cols();
        let mut out = GeneralMatrix::zeros(self.size(), cols);
        let sym = if adjoint {
            self.symbol.adjoint()
        } else {
            self.symbol.clone()
        };
        for i in 0..nodes {
            // Row block i of T couples to node j = i + off with coefficient c;
            // row block i of T* couples to node j = i - off.
            for &(off, coef) in &self.stencil {
                if coef == 0.0 {
                    continue;
                }
                let o = if adjoint { -off } else { off };
                let Some(j) = neighbour(i, o, nodes, self.boundary) else {
                    continue;
                };
                accumulate(&mut out, i, j, n, cols, &sym, coef, x);
            }
            let s = self.potentials[i].as_general();
            accumulate(&mut out, i, i, n, cols, s, 1.0, x);
        }
        out
    }
}

#[allow(clippy::too_many_arguments)]
fn accumulate(
    out: &mut GeneralMatrix,
    i: usize,
    j: usize,
    n: usize,
    cols: usize,
    block: &GeneralMatrix,
    coef: f64,
    x: &GeneralMatrix,
) {
    for a in 0..n {
        for b in 0..n {
            let s: C64 = block.get(a, b) * coef;
            if s == ZERO {
                continue;
            }
            let row = i * n + a;
            let src = j * n + b;
            for c in 0..cols {
                let v = x.get(src, c);
                if v != ZERO {
                    out.add_at(row, c, s * v);
                }
            }
        }
    }
}
