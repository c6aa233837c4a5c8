use super::*;
use crate::family::{build_family, FamilyDescriptor, Grid1D, Layout, NodeRange, PotentialFamily};
use crate::numerics::HermitianMatrix;
use crate::tolerances::Tolerances;
use crate::Error;

const TOL: Tolerances = Tolerances::DEFAULT;

fn tanh_family() -> PotentialFamily {
    let grid = Grid1D::line(-8.0, 8.0, 0.1).unwrap();
    build_family(&FamilyDescriptor::tanh(), &grid, &Layout::compact(-2.0, 2.0)).unwrap()
}

fn constant_family(value: f64) -> PotentialFamily {
    let grid = Grid1D::line(-8.0, 8.0, 0.1).unwrap();
    build_family(
        &FamilyDescriptor::constant(HermitianMatrix::scalar(value)),
        &grid,
        &Layout::compact(-2.0, 2.0),
    )
    .unwrap()
}

fn small(n: usize) -> EnsembleSpec {
    EnsembleSpec::default().with_instances(n).with_dims(1, 2)
}

fn indices(r: &TheoremCheckResult) -> Vec<Vec<Vec<i64>>> {
    r.values
        .iter()
        .map(|v| v.indices.iter().map(|i| i.index.clone()).collect())
        .collect()
}

#[test]
fn tanh_index_equals_flow() {
    let r = check_index_equals_sf_family(&tanh_family(), &TOL);
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.values[0].indices[0].index, vec![1]);
    assert_eq!(r.values[0].flows[0].net_flow, vec![1]);
    assert!(r.values[0].indices[0].gap_ratio >= 100.0);
    assert_eq!(r.values[0].indices[0].trail.len(), 3);
}

#[test]
fn block_ensemble_matches_per_block() {
    let ens = EnsembleSpec {
        kind: EnsembleKind::Blocks { blocks: 3 },
        ..small(2)
    };
    let r = check_index_equals_sf(&ens, &TOL).unwrap();
    assert!(r.passed(), "{r:?}");
    for v in &r.values {
        assert_eq!(v.indices[0].index.len(), 3);
        assert_eq!(v.indices[0].index, v.flows[0].net_flow);
    }
}

#[test]
fn declared_bounds_too_tight_make_the_instance_inadmissible() {
    let grid = Grid1D::line(-8.0, 8.0, 0.1).unwrap();
    let layout = Layout {
        compact: Some([-2.0, 2.0]),
        bounds: vec![Some(1e-4), Some(1e-4)],
    };
    let fam = build_family(&FamilyDescriptor::tanh(), &grid, &layout).unwrap();
    let r = check_index_equals_sf_family(&fam, &TOL);
    assert!(r.passed());
    assert_eq!(r.inadmissible.len(), 1);
    assert_eq!(r.admissible(), 0);
}

#[test]
fn rescaling_tanh() {
    let r = check_rescaling(&tanh_family(), &[0.25, 1.0, 4.0], &TOL);
    assert!(r.passed(), "{r:?}");
    assert_eq!(indices(&r), vec![vec![vec![1]; 3]]);
    let r = check_rescaling(&tanh_family(), &[1.0], &TOL);
    assert!(r.passed());
}

#[test]
fn relative_index_with_itself_is_a_rearrangement() {
    let fam = tanh_family();
    let c = NodeRange::new(70, 80);
    let glue = GlueSpec { collar1: c, collar2: c };
    let (m3, m4) = swap_at_collars(&fam, &fam, &glue, &TOL).unwrap();
    assert!(m3.same_samples(&fam) && m4.same_samples(&fam));
    let r = check_relative_index(&fam, &fam, &glue, &TOL).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(indices(&r)[0], vec![vec![1]; 4]);
}

#[test]
fn relative_index_tanh_with_constant_core() {
    let fam1 = tanh_family();
    let (fam2, glue) = matched_partner(&fam1, &constant_family(-1.0), 10, 10, 7).unwrap();
    let r = check_relative_index(&fam1, &fam2, &glue, &TOL).unwrap();
    assert!(r.passed(), "{r:?}");
    let idx = &indices(&r)[0];
    assert_eq!(idx[0][0] + idx[1][0], idx[2][0] + idx[3][0]);
    assert_eq!(idx[1], vec![0]);
}

#[test]
fn collar_mismatch_is_a_precondition_error() {
    let fam1 = tanh_family();
    let fam2 = constant_family(1.0);
    let glue = GlueSpec {
        collar1: NodeRange::new(60, 70),
        collar2: NodeRange::new(60, 70),
    };
    assert!(matches!(
        check_relative_index(&fam1, &fam2, &glue, &TOL),
        Err(Error::CollarMismatch(_))
    ));
    // Matching samples but a singular collar.
    let c = NodeRange::new(75, 86);
    let glue = GlueSpec { collar1: c, collar2: c };
    assert!(matches!(
        check_relative_index(&fam1, &fam1, &glue, &TOL),
        Err(Error::CollarMismatch(_))
    ));
}

#[test]
fn relative_index_random_pairs() {
    let r = check_relative_index_ensemble(&small(2), &TOL).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.admissible(), 2);
}

#[test]
fn cylinder_replacement_tanh_and_constant() {
    let r = check_cylinder_replacement(&tanh_family(), &[8.0, 16.0, 32.0], &TOL);
    assert!(r.passed(), "{r:?}");
    assert_eq!(indices(&r)[0], vec![vec![1]; 3]);
    let r = check_cylinder_replacement(&constant_family(1.0), &[8.0, 16.0], &TOL);
    assert!(r.passed(), "{r:?}");
    assert_eq!(indices(&r)[0], vec![vec![0]; 2]);
}

#[test]
fn homotopies_of_tanh_and_constant() {
    let r = check_homotopy_invariance(&tanh_family(), &TOL);
    assert!(r.passed(), "{r:?}");
    assert_eq!(indices(&r)[0], vec![vec![1]; 10]);
    let r = check_homotopy_invariance(&constant_family(1.0), &TOL);
    assert!(r.passed(), "{r:?}");
    assert_eq!(indices(&r)[0], vec![vec![0]; 10]);
}

#[test]
fn graded_ensemble_vanishes() {
    let r = check_graded_vanishing(&small(2), &TOL).unwrap();
    assert!(r.passed(), "{r:?}");
    let r = check_graded_vanishing_family(&tanh_family(), &TOL);
    assert!(r.passed());
    assert_eq!(indices(&r)[0], vec![vec![0]]);
}

#[test]
fn flow_oracles_agree() {
    let r = check_flow_oracles(&EnsembleSpec::default().with_instances(30), &TOL).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.instances, 30);
}

#[test]
fn checks_are_deterministic_and_instances_reproducible() {
    let ens = small(3);
    let a = check_index_equals_sf(&ens, &TOL).unwrap();
    let b = check_index_equals_sf(&ens, &TOL).unwrap();
    assert_eq!(a, b);
    for v in &a.values {
        let inst = ens.instance(v.instance).unwrap();
        assert_eq!(Some(inst.seed), v.seed);
        assert_eq!(inst.dim, v.dim);
    }
}

#[test]
fn seeds_differ_per_instance() {
    let s: Vec<u64> = (0..100).map(|i| instance_seed(1, i)).collect();
    let mut u = s.clone();
    u.sort();
    u.dedup();
    assert_eq!(u.len(), s.len());
}

#[test]
fn theorem_ids_round_trip() {
    for id in TheoremId::ALL {
        assert_eq!(id.name().parse::<TheoremId>().unwrap(), id);
        let j = serde_json::to_string(&id).unwrap();
        assert_eq!(j, format!("\"{}\"", id.name()));
    }
    assert!("nope".parse::<TheoremId>().is_err());
}
