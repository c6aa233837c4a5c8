use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_hermitian(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    let g = GeneralMatrix::from_fn(n, n, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    HermitianMatrix::new(&g + &g.adjoint()).unwrap()
}

fn random_general(rng: &mut impl Rng, rows: usize, cols: usize) -> GeneralMatrix {
    GeneralMatrix::from_fn(rows, cols, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

// Determinant by Gaussian elimination with partial pivoting.
fn det(mut a: Vec<Vec<C64>>) -> C64 {
    let n = a.len();
    let mut d = c(1.0, 0.0);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
            .unwrap();
        if a[p][k].norm() == 0.0 {
            return c(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        d *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    d
}

// Real roots of det(H - x) by sign scanning and bisection.
fn charpoly_roots(h: &HermitianMatrix) -> Vec<f64> {
    let n = h.dim();
    let p = |x: f64| {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| h.get(i, j) - if i == j { c(x, 0.0) } else { c(0.0, 0.0) })
                    .collect()
            })
            .collect();
        det(rows).re
    };
    let bound = h.as_general().frobenius_norm() + 1.0;
    let steps = 40_000;
    let mut roots = vec![];
    let mut x0 = -bound;
    let mut p0 = p(x0);
    for s in 1..=steps {
        let x1 = -bound + 2.0 * bound * s as f64 / steps as f64;
        let p1 = p(x1);
        if p0 == 0.0 {
            roots.push(x0);
        } else if p0.signum() != p1.signum() && p1 != 0.0 {
            let (mut lo, mut hi, mut plo) = (x0, x1, p0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let pm = p(mid);
                if pm.signum() == plo.signum() {
                    lo = mid;
                    plo = pm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        p0 = p1;
    }
    roots
}

// Gauss-Jordan inverse.
fn gj_inverse(a: &GeneralMatrix) -> GeneralMatrix {
    let n = a.rows();
    let mut m: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            (0..2 * n)
                .map(|j| {
                    if j < n {
                        a.get(i, j)
                    } else if j - n == i {
                        c(1.0, 0.0)
                    } else {
                        c(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm()))
            .unwrap();
        m.swap(p, k);
        let piv = m[k][k];
        for v in m[k].iter_mut() {
            *v /= piv;
        }
        for i in 0..n {
            if i != k {
                let f = m[i][k];
                for j in 0..2 * n {
                    let t = m[k][j];
                    m[i][j] -= f * t;
                }
            }
        }
    }
    GeneralMatrix::from_fn(n, n, |i, j| m[i][j + n])
}

// Spectral norm by power iteration on B*B.
fn power_norm(b: &GeneralMatrix) -> f64 {
    let bb = &b.adjoint() * b;
    let mut x: Vec<C64> = (0..b.cols()).map(|i| c(1.0 + i as f64 * 0.1, 0.3)).collect();
    let mut lam = 0.0;
    for _ in 0..5000 {
        let y = bb.mat_vec(&x);
        let nrm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        lam = nrm;
        x = y.into_iter().map(|z| z / nrm).collect();
    }
    lam.sqrt()
}

#[test]
fn identity_eigenvalues() {
    let es = eigh(&HermitianMatrix::identity(3)).unwrap();
    assert_eq!(es.eigenvalues, vec![1.0, 1.0, 1.0]);
}

#[test]
fn diagonal_eigenvalues() {
    let es = eigh(&HermitianMatrix::real_diag(&[5.0, -2.0, 0.0])).unwrap();
    assert_eq!(es.eigenvalues, vec![-2.0, 0.0, 5.0]);
}

#[test]
fn eigh_matches_characteristic_polynomial_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=6 {
        let h = random_hermitian(&mut rng, n);
        let es = eigh(&h).unwrap();
        let roots = charpoly_roots(&h);
        assert_eq!(roots.len(), n, "n={n}");
        for (a, b) in es.eigenvalues.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(es.max_residual(&h) < 1e-9);
        assert!(es.orthonormality_defect() < 1e-10);
    }
}

#[test]
fn asymmetric_input_is_rejected() {
    let m = GeneralMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap();
    assert!(matches!(
        HermitianMatrix::new(m),
        Err(Error::SymmetryViolation { .. })
    ));
}

#[test]
fn tiny_asymmetry_is_symmetrized() {
    let m = GeneralMatrix::from_rows(&[
        vec![c(1.0, 1e-14), c(2.0, 1e-13)],
        vec![c(2.0, -1e-13 + 1e-14), c(3.0, 0.0)],
    ])
    .unwrap();
    let h = HermitianMatrix::new(m).unwrap();
    assert_eq!(h.as_general().asymmetry(), 0.0);
    assert_eq!(h.get(0, 0).im, 0.0);
}

#[test]
fn zero_matrix_singular_values() {
    let s = svd(&GeneralMatrix::zeros(2, 3)).unwrap();
    assert_eq!(s.singular_values, vec![0.0, 0.0]);
}

#[test]
fn diagonal_singular_values() {
    let s = svd(&GeneralMatrix::real_diag(&[1.0, 3.0])).unwrap();
    assert!((s.singular_values[0] - 3.0).abs() < 1e-15);
    assert!((s.singular_values[1] - 1.0).abs() < 1e-15);
}

#[test]
fn svd_squares_match_gram_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_general(&mut rng, 8, 8);
    let s = svd(&a).unwrap();
    let gram = HermitianMatrix::new(&a.adjoint() * &a).unwrap();
    let mut ev = eigenvalues(&gram);
    ev.reverse();
    for (sig, lam) in s.singular_values.iter().zip(&ev) {
        assert!((sig * sig - lam).abs() < 1e-8);
    }
    let err = (&s.reconstruct() - &a).frobenius_norm();
    assert!(err <= 1e-9 * a.norm());
}

#[test]
fn real_and_complex_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = GeneralMatrix::from_fn(7, 7, |_, _| c(rng.random_range(-1.0..1.0), 0.0));
    let real = singular_values(&a);
    // A unit phase on one column forces the complex path without changing σ.
    let mut b = a.clone();
    for i in 0..7 {
        b.set(i, 2, b.get(i, 2) * c(0.6, 0.8));
    }
    assert!(!b.is_real());
    let cplx = singular_values(&b);
    for (x, y) in real.iter().zip(&cplx) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn min_singular_value_examples() {
    assert!((min_singular_value(&GeneralMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-15);
    let d = GeneralMatrix::real_diag(&[2.0, 0.1]);
    assert!((min_singular_value(&d).unwrap() - 0.1).abs() < 1e-15);
    assert!(min_singular_value(&GeneralMatrix::zeros(2, 3)).is_err());
}

#[test]
fn min_singular_value_matches_explicit_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let a = &random_general(&mut rng, 5, 5) + &GeneralMatrix::identity(5).scale(2.0);
    let oracle = 1.0 / power_norm(&gj_inverse(&a));
    let got = min_singular_value(&a).unwrap();
    assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
}

#[test]
fn bounded_transform_on_diagonal() {
    let h = HermitianMatrix::real_diag(&[0.0, 1.0]);
    let b = bounded_transform(&h).unwrap();
    let want = GeneralMatrix::real_diag(&[0.0, 1.0 / 2f64.sqrt()]);
    assert!((b.as_general() - &want).max_abs() < 1e-15);
}

#[test]
fn identity_function_returns_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = random_hermitian(&mut rng, 5);
    let f = apply_function(&h, |x| x).unwrap();
    assert!((f.as_general() - h.as_general()).max_abs() < 1e-12);
}

#[test]
fn normalizer_squares_map_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_hermitian(&mut rng, 4);
    let lam = eigenvalues(&h);
    for chi in [Normalizer::Tanh, Normalizer::Arctan, Normalizer::BoundedTransform] {
        let x = chi.apply(&h).unwrap();
        let sq = HermitianMatrix::new(x.as_general() * x.as_general()).unwrap();
        let mut want: Vec<f64> = lam.iter().map(|&l| chi.eval(l).powi(2)).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in eigenvalues(&sq).iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn undefined_function_names_eigenvalue() {
    let h = HermitianMatrix::real_diag(&[1.0, 0.0]);
    match apply_function(&h, |x| 1.0 / x) {
        Err(Error::DomainViolation { eigenvalue }) => assert_eq!(eigenvalue, 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn projection_examples() {
    let h = HermitianMatrix::real_diag(&[-2.0, 0.5, 3.0]);
    let p = spectral_projection(&h, -1.0, 1.0).unwrap();
    let want = GeneralMatrix::real_diag(&[0.0, 1.0, 0.0]);
    assert!((p.as_general() - &want).max_abs() < 1e-15);
    let all = spectral_projection(&h, -10.0, 10.0).unwrap();
    assert!((all.as_general() - &GeneralMatrix::identity(3)).max_abs() < 1e-15);
    assert!(matches!(
        spectral_projection(&h, 0.5 + 1e-9, 4.0),
        Err(Error::IllConditionedCut { .. })
    ));
}

#[test]
fn projection_rank_counts_nonnegative_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = random_hermitian(&mut rng, 5);
    let lam = eigenvalues(&h);
    let top = lam[4] + 1.0;
    let p = spectral_projection(&h, 0.0, top).unwrap();
    let trace: f64 = (0..5).map(|i| p.get(i, i).re).sum();
    let count = lam.iter().filter(|&&l| l >= 0.0).count();
    assert!((trace - count as f64).abs() < 1e-10);
    let p2 = p.as_general() * p.as_general();
    assert!((&p2 - p.as_general()).max_abs() < 1e-10);
}

fn hermitian_strategy(max_n: usize) -> impl Strategy<Value = HermitianMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n * n).prop_map(move |v| {
            let g = GeneralMatrix::from_fn(n, n, |i, j| c(v[i * n + j].0, v[i * n + j].1));
            HermitianMatrix::new(&g + &g.adjoint()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenpair_residuals_small(h in hermitian_strategy(8)) {
        let es = eigh(&h).unwrap();
        prop_assert!(es.max_residual(&h) <= 1e-9);
        prop_assert!(es.orthonormality_defect() <= 1e-10);
        prop_assert!(es.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn polynomial_composition(h in hermitian_strategy(6)) {
        let g = |x: f64| x * x - 0.5 * x;
        let f = |x: f64| 2.0 * x * x * x + x - 1.0;
        let lhs = apply_function(&h, |x| f(g(x))).unwrap();
        let rhs = apply_function(&apply_function(&h, g).unwrap(), f).unwrap();
        let scale = 1.0 + lhs.as_general().max_abs();
        prop_assert!((lhs.as_general() - rhs.as_general()).max_abs() <= 1e-8 * scale);
    }

    #[test]
    fn disjoint_projections_annihilate(h in hermitian_strategy(6), cut in -1.5f64..1.5) {
        let lam = eigenvalues(&h);
        prop_assume!(lam.iter().all(|l| (l - cut).abs() > 1e-6));
        let lo = lam[0] - 1.0;
        let hi = lam[lam.len() - 1] + 1.0;
        let p = spectral_projection(&h, lo, cut);
        let q = spectral_projection(&h, cut + 1e-7, hi);
        if let (Ok(p), Ok(q)) = (p, q) {
            prop_assert!((p.as_general() * q.as_general()).max_abs() <= 1e-9);
        }
    }

    #[test]
    fn min_sigma_times_inverse_norm(v in proptest::collection::vec(-1.0f64..1.0, 32)) {
        let a = GeneralMatrix::from_fn(4, 4, |i, j| {
            c(v[i * 4 + j] * 0.3 + if i == j { 2.0 } else { 0.0 }, v[16 + i * 4 + j] * 0.3)
        });
        let inv = inverse(&a).unwrap();
        let prod = min_singular_value(&a).unwrap() * inv.norm();
        prop_assert!((prod - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn apply_function_commutes(h in hermitian_strategy(6)) {
        let f = apply_function(&h, |x| x.sin()).unwrap();
        let comm = &(f.as_general() * h.as_general()) - &(h.as_general() * f.as_general());
        let hn = h.as_general().frobenius_norm();
        prop_assert!(comm.max_abs() <= 1e-9 * (1.0 + hn));
    }
}
