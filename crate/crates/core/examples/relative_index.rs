//! Cut-and-paste along a matched collar: Index1 + Index2 = Index3 + Index4.

use callias::family::{build_family, FamilyDescriptor, Grid1D, Layout};
use callias::theorems::{certified_index, check_relative_index, matched_partner, swap_at_collars};
use callias::Tolerances;

fn main() -> callias::Result<()> {
    let tol = Tolerances::DEFAULT;
    let grid = Grid1D::line(-6.0, 6.0, 0.05)?;
    let layout = Layout::compact(-4.0, 4.0);
    let fam1 = build_family(&FamilyDescriptor::tanh(), &grid, &layout)?;
    let base = build_family(&FamilyDescriptor::random_smooth(1, 3), &grid, &layout)?;
    let (fam2, glue) = matched_partner(&fam1, &base, 20, 20, 11)?;
    println!("collars {:?} and {:?}", glue.collar1, glue.collar2);

    let (m3, m4) = swap_at_collars(&fam1, &fam2, &glue, &tol)?;
    for (name, f) in [("M1", &fam1), ("M2", &fam2), ("M3", &m3), ("M4", &m4)] {
        let r = certified_index(f, &tol)?;
        println!("{name}: {} nodes, index {:?}", f.len(), r.index);
    }
    let r = check_relative_index(&fam1, &fam2, &glue, &tol)?;
    println!("verdict {:?}", r.verdict);
    Ok(())
}
