//! Index = spectral flow over a seeded ensemble of random families.
//!
//! `cargo run --release --example theorem_ensemble -- 20`

use callias::theorems::{check_index_equals_sf, EnsembleSpec};
use callias::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = std::env::args().nth(1).map_or(Ok(10), |s| s.parse())?;
    let ens = EnsembleSpec::default().with_instances(n).with_dims(1, 3);
    let r = check_index_equals_sf(&ens, &Tolerances::DEFAULT)?;
    for v in &r.values {
        let idx = &v.indices[0];
        println!(
            "instance {:>3} dim {} seed {:>20}: index {:?} flow {:?} gap {:.1e}",
            v.instance,
            v.dim,
            v.seed.unwrap_or_default(),
            idx.index,
            v.flows[0].net_flow,
            idx.gap_ratio
        );
    }
    for f in &r.failures {
        println!("FAILED {f:?}");
    }
    println!(
        "{:?}: {} instances, {} admissible, {} failures",
        r.verdict,
        r.instances,
        r.admissible(),
        r.failures.len()
    );
    Ok(())
}
