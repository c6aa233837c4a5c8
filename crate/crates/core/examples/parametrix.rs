//! Patched right parametrix of the finest truncation: the residual T·Q − 1
//! lives next to the partition ramps and has small rank.

use callias::discretize::{assemble_dirac_schrodinger, build_parametrix, Boundary, Scheme};
use callias::family::{build_family, FamilyDescriptor, Grid1D, Layout};
use callias::index::{default_ladder, prepare_rung, DEFAULT_H_CAP};
use callias::Tolerances;

fn main() -> callias::Result<()> {
    let tol = Tolerances::DEFAULT;
    let grid = Grid1D::line(-8.0, 8.0, 0.1)?;
    let fam = build_family(&FamilyDescriptor::tanh(), &grid, &Layout::compact(-2.0, 2.0))?;
    let rung = *default_ladder(&fam, DEFAULT_H_CAP, &tol)?.last().expect("three rungs");
    let prepared = prepare_rung(&fam, rung, &tol)?;
    let op = assemble_dirac_schrodinger(&prepared, Scheme::Upwind, Boundary::Dirichlet)?;
    let p = build_parametrix(&op, &prepared)?;

    println!("operator size {}", op.size());
    println!("partition pieces {}, interfaces {}", p.partition.len(), p.interfaces);
    println!("residual rows {:?}", p.support_rows);
    println!("|TQ - 1| = {:.3e}, off support {:.1e}", p.right_norm, p.off_support_max);
    println!("rank {} <= bound {}", p.residual_rank, p.rank_bound);
    println!("|QT - 1| = {:.3e} (left residual, not localized)", p.left_norm);
    Ok(())
}
