//! The doubled family S ⊗ σ₁ anticommutes with the grading, so its index vanishes.

use callias::family::{build_family, FamilyDescriptor, Grid1D, Layout};
use callias::index::{default_ladder, graded_convergence_study, DEFAULT_H_CAP};
use callias::Tolerances;

fn main() -> callias::Result<()> {
    let tol = Tolerances::DEFAULT;
    let grid = Grid1D::line(-5.0, 5.0, 0.1)?;
    for seed in 0..4 {
        let fam = build_family(&FamilyDescriptor::random_smooth(2, seed), &grid, &Layout::compact(-3.0, 3.0))?;
        let ladder = default_ladder(&fam, DEFAULT_H_CAP, &tol)?;
        let g = graded_convergence_study(&fam, &ladder, &tol)?;
        println!(
            "seed {seed}: index {:?}, vanishes {}, |G^2-1| {:.1e}, |G s + s G| {:.1e}",
            g.report.index, g.vanishes, g.square_residual, g.anticommutation_residual
        );
    }
    Ok(())
}
