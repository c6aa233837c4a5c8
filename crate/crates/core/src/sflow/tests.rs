use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::family::{
    build_family, rescale, FamilyDescriptor, Grid1D, GridKind, Layout, NodeRange, PotentialFamily,
    RandomSmooth,
};
use crate::numerics::{count_in, eigenvalues, HermitianMatrix};
use crate::tolerances::Tolerances;

fn line(a: f64, b: f64, h: f64, f: impl FnMut(f64) -> HermitianMatrix) -> PotentialFamily {
    let grid = Grid1D::line(a, b, h).unwrap();
    let k = grid.range_within(-2.0, 2.0);
    PotentialFamily::from_fn(grid, k, f).unwrap()
}

fn random_line(dim: usize, seed: u64, h: f64) -> PotentialFamily {
    let grid = Grid1D::line(-5.0, 5.0, h).unwrap();
    build_family(&FamilyDescriptor::random_smooth(dim, seed), &grid, &Layout::compact(-3.0, 3.0))
        .unwrap()
}

fn random_loop(dim: usize, seed: u64, len: usize) -> PotentialFamily {
    let desc = FamilyDescriptor::RandomLoop(RandomSmooth {
        dim,
        seed,
        ..RandomSmooth::default()
    });
    build_family(&desc, &Grid1D::circle(len).unwrap(), &Layout::default()).unwrap()
}

/// Nodes [a, b) as a line family with K = everything.
fn sub(fam: &PotentialFamily, a: usize, b: usize) -> PotentialFamily {
    let nodes: Vec<f64> = (a..b).map(|i| fam.grid().x(i)).collect();
    let grid = Grid1D::from_nodes(GridKind::Line, &nodes).unwrap();
    PotentialFamily::new(grid, fam.matrices()[a..b].to_vec(), NodeRange::new(0, b - a), vec![]).unwrap()
}

/// On a line with invertible ends the flow is the change in the number of
/// nonnegative eigenvalues between the two ends.
fn endpoint_oracle(fam: &PotentialFamily) -> i64 {
    let nonneg = |i: usize| count_in(&eigenvalues(fam.matrix(i)), 0.0, f64::INFINITY) as i64;
    nonneg(fam.len() - 1) - nonneg(0)
}

#[test]
fn constant_family_has_no_flow() {
    let m = HermitianMatrix::from_real_rows(&[vec![1.0, 0.5], vec![0.5, -2.0]]).unwrap();
    let fam = line(-4.0, 4.0, 0.25, |_| m.clone());
    let r = spectral_flow_crossing(&fam).unwrap();
    assert_eq!(r.net_flow, vec![0]);
    assert!(r.crossings.is_empty());
    assert_eq!(spectral_flow_partition(&fam).unwrap(), vec![0]);
    assert!(r.agreement);
}

#[test]
fn tanh_flows_up_once_near_zero() {
    let fam = line(-8.0, 8.0, 0.1, |x| HermitianMatrix::scalar(x.tanh()));
    let r = spectral_flow_crossing(&fam).unwrap();
    assert_eq!(r.net_flow, vec![1]);
    assert_eq!(r.crossings.len(), 1);
    assert_eq!(r.crossings[0].direction, 1);
    assert!(r.crossings[0].location.abs() <= 0.1);
    assert_eq!(spectral_flow_partition(&fam).unwrap(), vec![1]);
}

#[test]
fn opposite_tanh_pair_cancels() {
    // Offset grid so that no node sits on the double zero.
    let fam = line(-8.05, 7.95, 0.1, |x| HermitianMatrix::real_diag(&[x.tanh(), -x.tanh()]));
    let r = spectral_flow_crossing(&fam).unwrap();
    assert_eq!(r.net_flow, vec![0]);
    let mut dirs: Vec<i64> = r.crossings.iter().map(|c| c.direction).collect();
    dirs.sort();
    assert_eq!(dirs, vec![-1, 1]);
    assert!(r.agreement);
}

#[test]
fn double_zero_on_a_node_still_counts() {
    let fam = line(-8.0, 8.0, 0.1, |x| HermitianMatrix::real_diag(&[x.tanh(), -x.tanh()]));
    let r = spectral_flow_crossing(&fam).unwrap();
    assert_eq!(r.net_flow, vec![0]);
    assert_eq!(r.crossings.len(), 2);
}

#[test]
fn blocks_report_per_block_flow() {
    let grid = Grid1D::line(-8.0, 8.0, 0.2).unwrap();
    let desc = FamilyDescriptor::DirectSum {
        parts: vec![
            FamilyDescriptor::tanh(),
            FamilyDescriptor::ScalarProfile {
                profile: crate::family::Profile::Tanh,
                scale: 1.0,
                coefficient: Some(HermitianMatrix::scalar(-1.0)),
                offset: None,
            },
        ],
    };
    let fam = build_family(&desc, &grid, &Layout::compact(-2.0, 2.0)).unwrap();
    let r = spectral_flow_crossing(&fam).unwrap();
    assert_eq!(r.net_flow, vec![1, -1]);
    assert_eq!(r.oracle_flow, vec![1, -1]);
}

#[test]
fn singular_endpoint_is_rejected() {
    let fam = line(-4.0, 4.0, 0.5, |x| HermitianMatrix::scalar(x.max(0.0)));
    let err = spectral_flow_crossing(&fam).unwrap_err();
    assert!(matches!(err, Error::EndpointNotInvertible { node: 0, .. }), "{err}");
    assert!(spectral_flow_partition(&fam).is_err());
}

#[test]
fn unresolved_dip_reports_depth() {
    // The small branch stays positive at both samples while the other one
    // swings by 10, so the Weyl test keeps asking for refinement.
    let fam = line(-1.0, 1.0, 1.0, |x| HermitianMatrix::real_diag(&[0.1, 5.0 * x.signum()]));
    let tol = Tolerances {
        max_refinement_depth: 3,
        ..Tolerances::DEFAULT
    };
    let err = spectral_flow_crossing_with(&fam, &tol).unwrap_err();
    assert!(matches!(err, Error::ResolutionFailure { segment: 0, depth: 3 }), "{err}");
    let ok = spectral_flow_crossing(&fam).unwrap();
    assert_eq!(ok.net_flow, vec![1]);
    assert!(ok.refinement_depth >= 6);
}

#[test]
fn trace_csv_has_header_and_rows() {
    let fam = line(-2.0, 2.0, 0.5, |x| HermitianMatrix::real_diag(&[x, 1.0]));
    let r = spectral_flow_crossing(&fam).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    r.write_trace_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("arclength,branch,eigenvalue"));
    assert_eq!(lines.count(), 2 * fam.len());
}

#[test]
fn constant_loop_has_no_flow() {
    let grid = Grid1D::circle(32).unwrap();
    let fam = PotentialFamily::from_fn(grid, NodeRange::new(0, 32), |_| HermitianMatrix::scalar(2.0))
        .unwrap();
    let r = spectral_flow_circle(&fam).unwrap();
    assert_eq!(r.net_flow, vec![0]);
    assert!(r.crossings.is_empty());
}

#[test]
fn rotating_gap_loop_has_no_crossings() {
    let grid = Grid1D::circle(64).unwrap();
    let fam = PotentialFamily::from_fn(grid, NodeRange::new(0, 64), |t| {
        HermitianMatrix::from_real_rows(&[vec![t.cos(), t.sin()], vec![t.sin(), -t.cos()]]).unwrap()
    })
    .unwrap();
    let r = spectral_flow_circle(&fam).unwrap();
    assert_eq!(r.net_flow, vec![0]);
    assert!(r.crossings.is_empty());
    assert_eq!(r.oracle_flow, vec![0]);
}

#[test]
fn random_loops_have_zero_flow() {
    for seed in 0..50 {
        let fam = random_loop(1 + (seed as usize % 4), seed, 96);
        let r = spectral_flow_circle(&fam).unwrap();
        assert_eq!(r.net_flow, vec![0], "seed {seed}");
        assert_eq!(r.oracle_flow, vec![0], "seed {seed}");
    }
}

/// All permutations, for checking the assignment solver.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assignment_is_optimal(w in (1usize..=5).prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, n), n))) {
        let n = w.len();
        let score = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| w[i][j]).sum::<f64>();
        let got = max_weight_assignment(&w);
        let mut seen = got.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let best = permutations(n).iter().map(|p| score(p)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((score(&got) - best).abs() < 1e-12);
    }

    #[test]
    fn crossing_and_partition_agree(dim in 1usize..=6, seed in any::<u64>()) {
        let fam = random_line(dim, seed, 0.25);
        let r = spectral_flow_crossing(&fam).unwrap();
        prop_assert!(r.agreement, "{:?} vs {:?}", r.net_flow, r.oracle_flow);
        prop_assert_eq!(r.total(), endpoint_oracle(&fam));
    }

    #[test]
    fn flow_is_rescaling_invariant(dim in 1usize..=4, seed in any::<u64>()) {
        let fam = random_line(dim, seed, 0.25);
        let base = spectral_flow_crossing(&fam).unwrap().net_flow;
        for lambda in [0.25, 1.0, 4.0, 16.0] {
            let scaled = rescale(&fam, lambda).unwrap();
            prop_assert_eq!(&spectral_flow_crossing(&scaled).unwrap().net_flow, &base);
        }
    }

    #[test]
    fn reversal_negates_flow(dim in 1usize..=4, seed in any::<u64>()) {
        let fam = random_line(dim, seed, 0.25);
        let a = spectral_flow_crossing(&fam).unwrap().total();
        let b = spectral_flow_crossing(&fam.reversed()).unwrap().total();
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn negation_negates_flow(dim in 1usize..=4, seed in any::<u64>()) {
        let fam = random_line(dim, seed, 0.25);
        let a = spectral_flow_crossing(&fam).unwrap().total();
        let b = spectral_flow_crossing(&fam.map(|m| m.scale(-1.0))).unwrap().total();
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn concatenation_adds(dim in 1usize..=4, seed in any::<u64>(), cut in 0.2f64..0.8) {
        let fam = random_line(dim, seed, 0.25);
        let n = fam.len();
        let mut m = (cut * n as f64) as usize;
        // Split at an invertible node.
        while crate::numerics::min_singular_value(fam.matrix(m).as_general()).unwrap() <= 1e-3 {
            m += 1;
        }
        let whole = spectral_flow_crossing(&fam).unwrap().total();
        let left = spectral_flow_crossing(&sub(&fam, 0, m + 1)).unwrap().total();
        let right = spectral_flow_crossing(&sub(&fam, m, n)).unwrap().total();
        prop_assert_eq!(whole, left + right);
    }

    #[test]
    fn blocks_add_up(d1 in 1usize..=3, d2 in 1usize..=3, seed in any::<u64>()) {
        let grid = Grid1D::line(-5.0, 5.0, 0.25).unwrap();
        let desc = FamilyDescriptor::DirectSum {
            parts: vec![
                FamilyDescriptor::random_smooth(d1, seed),
                FamilyDescriptor::random_smooth(d2, seed.wrapping_add(1)),
            ],
        };
        let fam = build_family(&desc, &grid, &Layout::compact(-3.0, 3.0)).unwrap();
        let r = spectral_flow_crossing(&fam).unwrap();
        for b in 0..2 {
            let part = spectral_flow_crossing(&fam.block(b).unwrap()).unwrap();
            prop_assert_eq!(r.net_flow[b], part.total());
        }
        let mono = spectral_flow_crossing(&fam.without_blocks()).unwrap();
        prop_assert_eq!(mono.total(), r.total());
    }
}
