use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::family::{
    build_family, make_constant_ends, FamilyDescriptor, Grid1D, Layout, NodeRange, PotentialFamily,
};
use crate::numerics::{eigenvalues, singular_values, GeneralMatrix, HermitianMatrix, C64};

fn tanh_family(a: f64, b: f64, h: f64) -> PotentialFamily {
    let grid = Grid1D::line(a, b, h).unwrap();
    build_family(&FamilyDescriptor::tanh(), &grid, &Layout::compact(-2.0, 2.0)).unwrap()
}

fn constant_line(len: usize, h: f64, m: HermitianMatrix) -> PotentialFamily {
    let grid = Grid1D::line(0.0, h * (len - 1) as f64, h).unwrap();
    PotentialFamily::from_fn(grid, NodeRange::new(1, len - 1), |_| m.clone()).unwrap()
}

fn circle_constant(len: usize, m: HermitianMatrix) -> PotentialFamily {
    let grid = Grid1D::circle(len).unwrap();
    PotentialFamily::from_fn(grid, NodeRange::new(0, len), |_| m.clone()).unwrap()
}

fn upwind(fam: &PotentialFamily) -> AssembledOperator {
    assemble_dirac_schrodinger(fam, Scheme::Upwind, Boundary::for_grid(fam.grid())).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn three_node_stencil_written_out() {
    let fam = constant_line(3, 1.0, HermitianMatrix::scalar(0.0));
    let op = upwind(&fam);
    let want =
        GeneralMatrix::from_real_rows(&[vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], vec![0.0, 0.0, -1.0]])
            .unwrap();
    assert_eq!(op.t, want);
    assert_eq!(op.t_adj, want.adjoint());
}

#[test]
fn boundary_must_match_grid() {
    let line = constant_line(4, 1.0, HermitianMatrix::scalar(1.0));
    let err = assemble_dirac_schrodinger(&line, Scheme::Upwind, Boundary::Periodic).unwrap_err();
    assert!(matches!(err, Error::BoundaryMismatch { .. }));
    let circle = circle_constant(8, HermitianMatrix::scalar(1.0));
    let err = assemble_dirac_schrodinger(&circle, Scheme::Upwind, Boundary::Dirichlet).unwrap_err();
    assert!(matches!(err, Error::BoundaryMismatch { .. }));
}

#[test]
fn circulant_spectrum_matches_closed_form() {
    let c = 0.7;
    let len = 16;
    let fam = circle_constant(len, HermitianMatrix::scalar(c));
    let op = upwind(&fam);
    let h = fam.grid().h();
    // Fourier modes e^{iθj} are eigenvectors with λ = (e^{iθ} − 1)/h + c.
    let mut oracle = vec![];
    for k in 0..len {
        let theta = std::f64::consts::TAU * k as f64 / len as f64;
        let lambda = (C64::from_polar(1.0, theta) - 1.0) / h + c;
        let v: Vec<C64> = (0..len).map(|j| C64::from_polar(1.0, theta * j as f64)).collect();
        let tv = op.t.mat_vec(&v);
        for j in 0..len {
            assert!((tv[j] - lambda * v[j]).norm() < 1e-12);
        }
        oracle.push(lambda.norm());
    }
    let sv = sorted(singular_values(&op.t));
    for (a, b) in sv.iter().zip(sorted(oracle)) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!(h * c <= 1.0);
    assert!(sv[0] >= c - 1e-12);
}

#[test]
fn diagonal_blocks_are_potential_minus_inverse_spacing() {
    let fam = tanh_family(-8.0, 8.0, 0.1);
    let op = upwind(&fam);
    let h = fam.grid().h();
    for i in 0..fam.len() {
        let want = fam.grid().x(i).tanh() - 1.0 / h;
        assert!((op.t.get(i, i).re - want).abs() < 1e-12);
        assert_eq!(op.t.get(i, i).im, 0.0);
    }
}

#[test]
fn wilson_stencil_equals_upwind() {
    let fam = tanh_family(-6.0, 6.0, 0.25);
    let up = upwind(&fam);
    let wi = assemble_dirac_schrodinger(&fam, Scheme::Wilson, Boundary::Dirichlet).unwrap();
    assert!((&up.t - &wi.t).max_abs() < 1e-12);
}

#[test]
fn zero_potential_on_circle_is_normal_with_constant_kernel() {
    let n = 3;
    let fam = circle_constant(12, HermitianMatrix::zeros(n));
    let op = upwind(&fam);
    let comm = &(&op.t * &op.t_adj) - &(&op.t_adj * &op.t);
    assert!(comm.max_abs() < 1e-12);
    let sv = singular_values(&op.t);
    assert_eq!(sv.iter().filter(|&&s| s < 1e-10).count(), n);
}

#[test]
fn stencil_products_match_dense() {
    let grid = Grid1D::line(-4.0, 4.0, 0.5).unwrap();
    let fam = build_family(&FamilyDescriptor::random_smooth(2, 3), &grid, &Layout::compact(-2.0, 2.0))
        .unwrap();
    let op = upwind(&fam);
    let x = GeneralMatrix::from_fn(op.size(), op.size(), |i, j| {
        C64::new((i as f64 * 0.37 + j as f64).sin(), (i * j) as f64 % 3.0)
    });
    assert!((&op.apply_left(&x) - &(&op.t * &x)).max_abs() < 1e-12);
    assert!((&op.apply_right(&x) - &(&x * &op.t)).max_abs() < 1e-12);
    let circle = circle_constant(9, HermitianMatrix::real_diag(&[0.5, -1.0]));
    let op = upwind(&circle);
    let x = GeneralMatrix::from_fn(op.size(), op.size(), |i, j| C64::new(i as f64 - j as f64, 1.0));
    assert!((&op.apply_left(&x) - &(&op.t * &x)).max_abs() < 1e-12);
    assert!((&op.apply_right(&x) - &(&x * &op.t)).max_abs() < 1e-12);
}

#[test]
fn block_family_splits_into_block_operators() {
    let grid = Grid1D::line(-4.0, 4.0, 0.25).unwrap();
    let desc = FamilyDescriptor::DirectSum {
        parts: vec![
            FamilyDescriptor::tanh(),
            FamilyDescriptor::random_smooth(2, 11),
        ],
    };
    let fam = build_family(&desc, &grid, &Layout::compact(-2.0, 2.0)).unwrap();
    let op = upwind(&fam);
    let mut parts = vec![];
    for b in 0..2 {
        let blk = op.block_operator(b).unwrap();
        let direct = upwind(&fam.block(b).unwrap());
        assert!((&blk.t - &direct.t).max_abs() < 1e-14);
        parts.extend(singular_values(&blk.t));
    }
    let whole = sorted(singular_values(&op.t));
    for (a, b) in whole.iter().zip(sorted(parts)) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn cylinder_length_zero_is_identity() {
    let fam = make_constant_ends(&tanh_family(-8.0, 8.0, 0.25), 1.0).unwrap();
    assert_eq!(attach_cylinder_ends(&fam, 0.0).unwrap(), fam);
}

#[test]
fn cylinder_ends_repeat_end_values() {
    let fam = make_constant_ends(&tanh_family(-8.0, 8.0, 0.25), 1.0).unwrap();
    let ext = attach_cylinder_ends(&fam, 4.0).unwrap();
    let m = 16;
    assert_eq!(ext.len(), fam.len() + 2 * m);
    for i in 0..m {
        assert_eq!(ext.matrix(i), fam.matrix(0));
        assert_eq!(ext.matrix(ext.len() - 1 - i), fam.matrix(fam.len() - 1));
    }
    assert_eq!(ext.grid().end_margins(), [4.0, 4.0]);
    assert_eq!(ext.compact(), NodeRange::new(fam.compact().start + m, fam.compact().end + m));
}

#[test]
fn cylinder_ends_require_constant_ends() {
    let err = attach_cylinder_ends(&tanh_family(-8.0, 8.0, 0.25), 2.0).unwrap_err();
    assert!(matches!(err, Error::NonConstantEnds { node: 0 }));
    assert!(err.to_string().contains("make_constant_ends"));
}

#[test]
fn cylinder_ends_keep_interior_blocks() {
    let fam = make_constant_ends(&tanh_family(-6.0, 6.0, 0.2), 1.0).unwrap();
    let ext = attach_cylinder_ends(&fam, 3.0).unwrap();
    let m = (ext.len() - fam.len()) / 2;
    let a = upwind(&fam);
    let b = upwind(&ext);
    let n = fam.dim();
    let rows: Vec<usize> = (m * n..(m + fam.len()) * n).collect();
    assert_eq!(b.t.submatrix(&rows, &rows), a.t);
}

#[test]
fn default_cylinder_length_uses_end_gap() {
    let fam = tanh_family(-8.0, 8.0, 0.25);
    let l = default_cylinder_length(&fam, &crate::Tolerances::DEFAULT).unwrap();
    let c = fam.grid().x(fam.compact().start - 1).tanh().abs();
    assert!((l - 12.0 / c).abs() < 1e-9);
}

#[test]
fn constant_family_parametrix_is_exact_inverse() {
    let m = HermitianMatrix::from_real_rows(&[vec![1.5, 0.3], vec![0.3, -0.8]]).unwrap();
    let fam = constant_line(20, 0.3, m);
    let op = upwind(&fam);
    let p = build_parametrix(&op, &fam).unwrap();
    assert_eq!(p.partition.len(), 1);
    assert!(p.residual_right.max_abs() <= 1e-10);
    assert!(p.residual_left.max_abs() <= 1e-10);
    assert_eq!(p.residual_rank, 0);
}

#[test]
fn tanh_parametrix_residual_is_localized_and_low_rank() {
    let fam = make_constant_ends(&tanh_family(-8.0, 8.0, 0.2), 1.0).unwrap();
    let op = upwind(&fam);
    let p = build_parametrix(&op, &fam).unwrap();
    assert_eq!(p.partition.len(), 3);
    for i in 0..fam.len() {
        let s: f64 = p.partition.iter().map(|c| c[i] * c[i]).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }
    assert_eq!(p.interfaces, 3);
    assert!(p.right_norm.is_finite() && p.left_norm.is_finite());
    assert!(p.residual_right.max_abs() > 1e-6, "residual should not vanish");
    assert!(p.off_support_max < 1e-8, "off support {}", p.off_support_max);
    // Q is a right parametrix; Q·T − 1 is measured but not localized.
    assert!(p.off_support_max_left.is_finite());
    assert!(p.residual_rank <= p.rank_bound, "{} > {}", p.residual_rank, p.rank_bound);
    // Independent SVD of the full residual.
    let sv = singular_values(&p.residual_right);
    let rank = sv.iter().filter(|&&s| s > 1e-8 * sv[0].max(1.0)).count();
    assert!(rank <= p.rank_bound);
    assert!((sv[0] - p.right_norm).abs() < 1e-9 * sv[0].max(1.0));
}

#[test]
fn singular_end_model_is_named() {
    let grid = Grid1D::line(-4.0, 4.0, 0.5).unwrap();
    let h = grid.h();
    // q = 1 − h s = −1 on the right end.
    let fam = PotentialFamily::from_fn(grid, NodeRange::new(3, 14), |x| {
        HermitianMatrix::scalar(if x > 2.5 { 2.0 / h } else { -1.0 })
    })
    .unwrap();
    let fam = make_constant_ends(&fam, 0.5).unwrap();
    let op = upwind(&fam);
    let err = build_parametrix(&op, &fam).unwrap_err();
    assert!(matches!(err, Error::InvertibilityFailure { patch: 2 }), "{err}");
}

fn small_family() -> impl Strategy<Value = PotentialFamily> {
    (1usize..=3, any::<u64>(), 0.3f64..0.6).prop_map(|(dim, seed, h)| {
        let grid = Grid1D::line(-3.0, 3.0, h).unwrap();
        build_family(&FamilyDescriptor::random_smooth(dim, seed), &grid, &Layout::compact(-1.5, 1.5))
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn product_block_pairs_singular_values(fam in small_family()) {
        let op = upwind(&fam);
        let p = op.product_block();
        prop_assert_eq!(p.as_general().asymmetry(), 0.0);
        let abs = sorted(eigenvalues(&p).into_iter().map(f64::abs).collect());
        let mut twice: Vec<f64> = singular_values(&op.t).into_iter().flat_map(|s| [s, s]).collect();
        twice = sorted(twice);
        for (a, b) in abs.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn adjoint_is_exact(fam in small_family()) {
        let op = upwind(&fam);
        prop_assert_eq!(&op.t_adj, &op.t.adjoint());
    }
}
