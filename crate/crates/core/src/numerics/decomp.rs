use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};

use super::matrix::{GeneralMatrix, HermitianMatrix, C64};
use crate::error::{Error, Result};

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: GeneralMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// Rebuilds V diag(g(λ)) V* from the stored pairs.
    pub fn reassemble(&self, values: &[f64]) -> HermitianMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut out = GeneralMatrix::zeros(n, n);
        for (k, &g) in values.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for j in 0..n {
                let vj = v.get(j, k).conj() * g;
                if vj == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..n {
                    out.add_at(i, j, v.get(i, k) * vj);
                }
            }
        }
        HermitianMatrix::symmetrized(out)
    }

    /// Largest eigenpair residual ||Hv - λv|| / (1 + |λ|).
    pub fn max_residual(&self, h: &HermitianMatrix) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.dim() {
            let v = self.vector(k);
            let hv = h.as_general().mat_vec(&v);
            let lam = self.eigenvalues[k];
            let r: f64 = hv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * lam).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r / (1.0 + lam.abs()));
        }
        worst
    }

    /// Max entry of |V*V - I|.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = &self.eigenvectors;
        let g = &v.adjoint() * v;
        (&g - &GeneralMatrix::identity(self.dim())).max_abs()
    }
}

/// Singular triple, singular values descending; thin factors.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: GeneralMatrix,
    pub v: GeneralMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> GeneralMatrix {
        let k = self.singular_values.len();
        let us = GeneralMatrix::from_fn(self.u.rows(), k, |i, j| {
            self.u.get(i, j) * self.singular_values[j]
        });
        &us * &self.v.adjoint()
    }
}

fn real_part(m: &GeneralMatrix) -> Mat<f64> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j).re)
}

fn complexify(m: faer::MatRef<'_, f64>) -> GeneralMatrix {
    GeneralMatrix::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

fn conv_err(what: &str) -> Error {
    Error::Convergence(format!("{what} did not converge"))
}

pub fn eigh(h: &HermitianMatrix) -> Result<EigenSystem> {
    let g = h.as_general();
    if h.dim() == 0 {
        return Ok(EigenSystem {
            eigenvalues: vec![],
            eigenvectors: GeneralMatrix::zeros(0, 0),
        });
    }
    if g.is_real() {
        let e = real_part(g)
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| conv_err("eigensolver"))?;
        let eigenvalues = (0..h.dim()).map(|k| e.S()[k]).collect();
        Ok(EigenSystem {
            eigenvalues,
            eigenvectors: complexify(e.U()),
        })
    } else {
        let e = g
            .faer()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| conv_err("eigensolver"))?;
        let eigenvalues = (0..h.dim()).map(|k| e.S()[k].re).collect();
        Ok(EigenSystem {
            eigenvalues,
            eigenvectors: GeneralMatrix::from_faer(e.U().to_owned()),
        })
    }
}

/// Ascending eigenvalues only.
pub fn eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let g = h.as_general();
    if h.dim() == 0 {
        return vec![];
    }
    let r = if g.is_real() {
        real_part(g).self_adjoint_eigenvalues(Side::Lower)
    } else {
        g.faer().self_adjoint_eigenvalues(Side::Lower)
    };
    r.expect("Hermitian eigenvalue iteration failed to converge")
}

/// Thin SVD `A = U Σ V*`, singular values descending.
pub fn svd(a: &GeneralMatrix) -> Result<Svd> {
    let k = a.rows().min(a.cols());
    if k == 0 {
        return Ok(Svd {
            singular_values: vec![],
            u: GeneralMatrix::zeros(a.rows(), 0),
            v: GeneralMatrix::zeros(a.cols(), 0),
        });
    }
    if a.is_real() {
        let s = real_part(a).thin_svd().map_err(|_| conv_err("SVD"))?;
        Ok(Svd {
            singular_values: (0..k).map(|i| s.S()[i]).collect(),
            u: complexify(s.U()),
            v: complexify(s.V()),
        })
    } else {
        let s = a.faer().thin_svd().map_err(|_| conv_err("SVD"))?;
        Ok(Svd {
            singular_values: (0..k).map(|i| s.S()[i].re).collect(),
            u: GeneralMatrix::from_faer(s.U().to_owned()),
            v: GeneralMatrix::from_faer(s.V().to_owned()),
        })
    }
}

/// Singular values only, descending.
pub fn singular_values(a: &GeneralMatrix) -> Vec<f64> {
    if a.rows().min(a.cols()) == 0 {
        return vec![];
    }
    let r = if a.is_real() {
        real_part(a).singular_values()
    } else {
        a.faer().singular_values()
    };
    r.expect("SVD iteration failed to converge")
}

pub fn min_singular_value(a: &GeneralMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "min_singular_value needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(singular_values(a).last().copied().unwrap_or(0.0))
}

/// Inverse by partial-pivot LU. Callers check invertibility beforehand.
pub fn inverse(a: &GeneralMatrix) -> Result<GeneralMatrix> {
    if !a.is_square() {
        return Err(Error::Shape("inverse of a non-square matrix".into()));
    }
    if a.is_real() {
        let inv = real_part(a).partial_piv_lu().inverse();
        Ok(complexify(inv.as_ref()))
    } else {
        Ok(GeneralMatrix::from_faer(a.faer().partial_piv_lu().inverse()))
    }
}
