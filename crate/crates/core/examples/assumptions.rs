//! Checks the standing hypotheses on a family and shows a cover bound
//! that is too tight to hold.

use callias::family::{build_family, verify_assumptions, FamilyDescriptor, Grid1D, Layout};

fn main() -> callias::Result<()> {
    let grid = Grid1D::line(-8.0, 8.0, 0.1)?;
    let fam = build_family(&FamilyDescriptor::tanh(), &grid, &Layout::compact(-2.0, 2.0))?;
    let report = verify_assumptions(&fam)?;
    println!("modulus of continuity  {:.4}", report.a2_modulus);
    println!("min sigma outside K    {:?}", report.a3_min_sigma_outside_k);
    for b in &report.a4_bounds {
        println!("patch {}: measured bound {:.4} at node {}", b.patch, b.measured, b.witness);
    }
    println!("flags {:?}", report.pass);

    let tight = fam.clone().with_bounds(&[Some(0.01), Some(0.01)])?;
    let report = verify_assumptions(&tight)?;
    println!("with a_j = 0.01: passed {}", report.passed());
    Ok(())
}
