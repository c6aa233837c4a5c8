use serde::{Deserialize, Serialize};

use super::kernel::{fredholm_index_with, IndexReport};
use super::study::{prepare_rung, run_ladder, Rung};
use crate::discretize::{assemble_with_symbol, AssembledOperator, Boundary, Scheme};
use crate::error::{Error, Result};
use crate::family::PotentialFamily;
use crate::numerics::{GeneralMatrix, HermitianMatrix};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedIndexReport {
    pub report: IndexReport,
    /// ‖Γ² − 1‖ (max entry).
    pub square_residual: f64,
    /// ‖Γσ + σΓ‖ for the derivative symbol σ.
    pub anticommutation_residual: f64,
    /// max over nodes of ‖ΓS − SΓ‖.
    pub commutation_residual: f64,
    pub vanishes: bool,
}

/// σ₁ ⊗ 1_n in spin-major order: [[0, 1], [1, 0]].
pub fn graded_symbol(n: usize) -> GeneralMatrix {
    let mut s = GeneralMatrix::zeros(2 * n, 2 * n);
    s.set_block(0, n, &GeneralMatrix::identity(n));
    s.set_block(n, 0, &GeneralMatrix::identity(n));
    s
}

/// Γ = diag(1_n, −1_n).
pub fn grading(n: usize) -> HermitianMatrix {
    let d: Vec<f64> = (0..2 * n).map(|i| if i < n { 1.0 } else { -1.0 }).collect();
    HermitianMatrix::real_diag(&d)
}

/// S ⊗ 1₂ in spin-major order: diag(S, S).
pub fn doubled_family(fam: &PotentialFamily) -> PotentialFamily {
    let out = fam.map(|m| HermitianMatrix::direct_sum(&[m.clone(), m.clone()]));
    out.without_blocks()
}

/// Assembles T = ∂_x ⊗ σ₁ + S on a doubled fiber.
pub fn assemble_graded(doubled: &PotentialFamily) -> Result<AssembledOperator> {
    let n2 = doubled.dim();
    if n2 % 2 != 0 {
        return Err(Error::Shape(format!("graded fiber must be even, got {n2}")));
    }
    assemble_with_symbol(
        doubled,
        &graded_symbol(n2 / 2),
        Scheme::Upwind,
        Boundary::for_grid(doubled.grid()),
    )
}

pub fn graded_index(op: &AssembledOperator, gamma: &HermitianMatrix) -> Result<GradedIndexReport> {
    graded_index_with(op, gamma, &Tolerances::DEFAULT)
}

pub fn graded_index_with(
    op: &AssembledOperator,
    gamma: &HermitianMatrix,
    tol: &Tolerances,
) -> Result<GradedIndexReport> {
    let n = op.fiber_dim;
    if gamma.dim() != n {
        return Err(Error::Shape(format!("Γ is {}x{0}, fiber is {n}", gamma.dim())));
    }
    let g = gamma.as_general();
    let square_residual = (&(g * g) - &GeneralMatrix::identity(n)).max_abs();
    let anticommutation_residual = (&(g * &op.symbol) + &(&op.symbol * g)).max_abs();
    let commutation_residual = op
        .potentials
        .iter()
        .map(|s| {
            let s = s.as_general();
            (&(g * s) - &(s * g)).max_abs()
        })
        .fold(0.0, f64::max);
    for (name, r) in [
        ("Γ² = 1", square_residual),
        ("Γ anticommutes with the derivative symbol", anticommutation_residual),
        ("Γ commutes with the potential", commutation_residual),
    ] {
        if r > tol.grading {
            return Err(Error::NotAGrading(format!("{name} fails by {r:.3e}")));
        }
    }
    let report = fredholm_index_with(op, tol)?;
    let vanishes = report.index.iter().all(|&i| i == 0);
    Ok(GradedIndexReport {
        report,
        square_residual,
        anticommutation_residual,
        commutation_residual,
        vanishes,
    })
}

/// Graded index along a ladder: each rung prepares S as for the ungraded
/// pipeline, doubles the fiber and counts the kernel with Γ = diag(1, −1).
pub fn graded_convergence_study(
    fam: &PotentialFamily,
    ladder: &[Rung],
    tol: &Tolerances,
) -> Result<GradedIndexReport> {
    let gamma = grading(fam.dim());
    let last = std::sync::Mutex::new(None);
    let report = run_ladder(ladder, tol, |r| {
        let f = prepare_rung(fam, r, tol)?;
        let g = graded_index_with(&assemble_graded(&doubled_family(&f))?, &gamma, tol)?;
        if r == *ladder.last().expect("ladder checked") {
            *last.lock().expect("no poisoning") = Some(g.clone());
        }
        Ok((g.report, f.len()))
    })?;
    let mut g = last.into_inner().expect("no poisoning").expect("finest rung ran");
    g.vanishes = report.index.iter().all(|&i| i == 0);
    g.report = report;
    Ok(g)
}
