//! Certified index of the tanh kink on a ladder of truncations.
//!
//! `cargo run --release --example tanh_index`

use callias::family::{build_family, FamilyDescriptor, Grid1D, Layout};
use callias::index::{convergence_study, default_ladder, DEFAULT_H_CAP};
use callias::Tolerances;

fn main() -> callias::Result<()> {
    let grid = Grid1D::line(-10.0, 10.0, 0.1)?;
    let fam = build_family(&FamilyDescriptor::tanh(), &grid, &Layout::compact(-3.0, 3.0))?;
    let ladder = default_ladder(&fam, DEFAULT_H_CAP, &Tolerances::DEFAULT)?;
    let report = convergence_study(&fam, &ladder)?;

    println!("{:>8} {:>8} {:>6} {:>8} {:>12}", "h", "L", "nodes", "index", "gap ratio");
    for e in &report.trail {
        println!(
            "{:>8.4} {:>8.2} {:>6} {:>8?} {:>12.3e}",
            e.h, e.cylinder_length, e.grid_size, e.index, e.gap_ratio
        );
    }
    println!("index {:?}, converged {}", report.index, report.converged);
    Ok(())
}
