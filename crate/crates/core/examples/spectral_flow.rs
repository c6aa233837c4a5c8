//! Spectral flow of a random 3x3 family, with the partition count as a
//! second opinion. Writes the eigenvalue branches to `branches.csv`.

use std::io::Write;

use callias::family::{build_family, FamilyDescriptor, Grid1D, Layout};
use callias::sflow::{spectral_flow_crossing, spectral_flow_partition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(3), |s| s.parse())?;
    let grid = Grid1D::line(-5.0, 5.0, 0.05)?;
    let desc = FamilyDescriptor::random_smooth(3, seed);
    let fam = build_family(&desc, &grid, &Layout::compact(-3.0, 3.0))?;

    let flow = spectral_flow_crossing(&fam)?;
    let oracle = spectral_flow_partition(&fam)?;
    println!("seed {seed}: net flow {:?}, partition count {oracle:?}", flow.net_flow);
    for c in &flow.crossings {
        println!("  {c:?}");
    }
    println!("refinement depth {}", flow.refinement_depth);

    let mut out = std::io::BufWriter::new(std::fs::File::create("branches.csv")?);
    writeln!(out, "arclength,branch,eigenvalue")?;
    for p in &flow.trace {
        writeln!(out, "{},{},{}", p.arclength, p.branch, p.eigenvalue)?;
    }
    println!("wrote {} points to branches.csv", flow.trace.len());
    Ok(())
}
