use std::fmt;
use std::ops::{Add, Mul, Sub};

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix (row/column counts fixed at construction).
#[derive(Clone, PartialEq)]
pub struct GeneralMatrix {
    data: Mat<C64>,
}

impl GeneralMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: Mat::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            data: Mat::from_fn(rows, cols, f),
        }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    pub(crate) fn from_faer(data: Mat<C64>) -> Self {
        Self { data }
    }

    pub fn faer(&self) -> &Mat<C64> {
        &self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[(i, j)] = value;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, value: C64) {
        self.data[(i, j)] += value;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols(), self.rows(), |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols(), self.rows(), |i, j| self.get(j, i))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| self.get(i, j) * factor)
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| self.get(i, j) * factor)
    }

    pub fn is_real(&self) -> bool {
        (0..self.cols()).all(|j| (0..self.rows()).all(|i| self.get(i, j).im == 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                m = m.max(self.get(i, j).norm());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                s += self.get(i, j).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Spectral norm (largest singular value).
    pub fn norm(&self) -> f64 {
        if self.rows() == 0 || self.cols() == 0 {
            return 0.0;
        }
        super::decomp::singular_values(self)
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows(), cols.len(), |i, j| self.get(i, cols[j]))
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self.get(row0 + i, col0 + j))
    }

    pub fn set_block(&mut self, row0: usize, col0: usize, block: &GeneralMatrix) {
        for j in 0..block.cols() {
            for i in 0..block.rows() {
                self.set(row0 + i, col0 + j, block.get(i, j));
            }
        }
    }

    pub fn mat_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols());
        let mut y = vec![ZERO; self.rows()];
        for (j, &xj) in x.iter().enumerate() {
            if xj == ZERO {
                continue;
            }
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += self.get(i, j) * xj;
            }
        }
        y
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &GeneralMatrix) -> Self {
        let (p, q) = (other.rows(), other.cols());
        Self::from_fn(self.rows() * p, self.cols() * q, |i, j| {
            self.get(i / p, j / q) * other.get(i % p, j % q)
        })
    }

    /// Max |A - A*| over entries.
    pub fn asymmetry(&self) -> f64 {
        let n = self.rows();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in i..n {
                m = m.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        m
    }

    /// Entries as `[re, im]` pairs, row-major; the interchange schema.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.rows())
            .map(|i| {
                (0..self.cols())
                    .map(|j| {
                        let z = self.get(i, j);
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| C64::new(p[0], p[1])).collect())
            .collect();
        Self::from_rows(&rows)
    }
}

impl fmt::Debug for GeneralMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneralMatrix({}x{}) ", self.rows(), self.cols())?;
        if self.rows() * self.cols() <= 64 {
            f.debug_list()
                .entries((0..self.rows()).map(|i| self.column_row(i)))
                .finish()
        } else {
            Ok(())
        }
    }
}

impl GeneralMatrix {
    fn column_row(&self, i: usize) -> Vec<C64> {
        (0..self.cols()).map(|j| self.get(i, j)).collect()
    }
}

impl Serialize for GeneralMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_pairs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GeneralMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        GeneralMatrix::from_pairs(&pairs).map_err(serde::de::Error::custom)
    }
}

impl<'a> Mul<&'a GeneralMatrix> for &'a GeneralMatrix {
    type Output = GeneralMatrix;
    fn mul(self, rhs: &'a GeneralMatrix) -> GeneralMatrix {
        assert_eq!(self.cols(), rhs.rows(), "shape mismatch in product");
        GeneralMatrix::from_faer(&self.data * &rhs.data)
    }
}

impl<'a> Add<&'a GeneralMatrix> for &'a GeneralMatrix {
    type Output = GeneralMatrix;
    fn add(self, rhs: &'a GeneralMatrix) -> GeneralMatrix {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()));
        GeneralMatrix::from_fn(self.rows(), self.cols(), |i, j| {
            self.get(i, j) + rhs.get(i, j)
        })
    }
}

impl<'a> Sub<&'a GeneralMatrix> for &'a GeneralMatrix {
    type Output = GeneralMatrix;
    fn sub(self, rhs: &'a GeneralMatrix) -> GeneralMatrix {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()));
        GeneralMatrix::from_fn(self.rows(), self.cols(), |i, j| {
            self.get(i, j) - rhs.get(i, j)
        })
    }
}

/// A square matrix that is Hermitian to within [`Tolerances::hermitian`].
///
/// Construction symmetrizes small asymmetries as (H + H*)/2 and rejects
/// anything larger, so every stored value is exactly Hermitian.
#[derive(Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HermitianMatrix(GeneralMatrix);

impl HermitianMatrix {
    pub fn new(m: GeneralMatrix) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::DEFAULT.hermitian)
    }

    pub fn with_tolerance(m: GeneralMatrix, tolerance: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let asymmetry = m.asymmetry();
        if !(asymmetry <= tolerance) {
            return Err(Error::SymmetryViolation {
                asymmetry,
                tolerance,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds (M + M*)/2 without any tolerance check.
    pub(crate) fn symmetrized(m: GeneralMatrix) -> Self {
        let n = m.rows();
        let mut out = m;
        for i in 0..n {
            let d = out.get(i, i);
            out.set(i, i, C64::new(d.re, 0.0));
            for j in i + 1..n {
                let avg = (out.get(i, j) + out.get(j, i).conj()) * 0.5;
                out.set(i, j, avg);
                out.set(j, i, avg.conj());
            }
        }
        HermitianMatrix(out)
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(GeneralMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(GeneralMatrix::identity(n))
    }

    pub fn real_diag(values: &[f64]) -> Self {
        HermitianMatrix(GeneralMatrix::real_diag(values))
    }

    pub fn scalar(value: f64) -> Self {
        Self::real_diag(&[value])
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(GeneralMatrix::from_real_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_general(&self) -> &GeneralMatrix {
        &self.0
    }

    pub fn into_general(self) -> GeneralMatrix {
        self.0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0.get(i, j)
    }

    pub fn scale(&self, factor: f64) -> Self {
        HermitianMatrix(self.0.scale(factor))
    }

    /// Real linear combination `a*self + b*other`, Hermitian by construction.
    pub fn combine(&self, a: f64, other: &HermitianMatrix, b: f64) -> Self {
        let n = self.dim();
        HermitianMatrix(GeneralMatrix::from_fn(n, n, |i, j| {
            self.get(i, j) * a + other.get(i, j) * b
        }))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        self.combine(1.0, other, -1.0)
    }

    pub fn norm(&self) -> f64 {
        let e = super::decomp::eigenvalues(self);
        e.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[HermitianMatrix]) -> Self {
        let n: usize = blocks.iter().map(HermitianMatrix::dim).sum();
        let mut out = GeneralMatrix::zeros(n, n);
        let mut offset = 0;
        for b in blocks {
            out.set_block(offset, offset, b.as_general());
            offset += b.dim();
        }
        HermitianMatrix(out)
    }

    pub fn principal_block(&self, start: usize, len: usize) -> Self {
        HermitianMatrix(self.0.block(start, start, len, len))
    }

    /// Largest entry outside the diagonal blocks given by `sizes`.
    pub fn off_block_max(&self, sizes: &[usize]) -> f64 {
        let mut owner = Vec::with_capacity(self.dim());
        for (b, &s) in sizes.iter().enumerate() {
            owner.extend(std::iter::repeat_n(b, s));
        }
        let mut m = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if owner.get(i) != owner.get(j) {
                    m = m.max(self.get(i, j).norm());
                }
            }
        }
        m
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian")?;
        self.0.fmt(f)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = GeneralMatrix::deserialize(d)?;
        HermitianMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<GeneralMatrix> for HermitianMatrix {
    type Error = Error;
    fn try_from(m: GeneralMatrix) -> Result<Self> {
        HermitianMatrix::new(m)
    }
}

impl AsRef<GeneralMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &GeneralMatrix {
        &self.0
    }
}
