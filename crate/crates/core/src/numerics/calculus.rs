use super::decomp::{eigh, EigenSystem};
use super::matrix::HermitianMatrix;
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

/// f(H) = V f(Λ) V*.
pub fn apply_function(h: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    let es = eigh(h)?;
    apply_to_system(&es, f)
}

pub fn apply_to_system(es: &EigenSystem, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    let mut values = Vec::with_capacity(es.dim());
    for &lam in &es.eigenvalues {
        let y = f(lam);
        if !y.is_finite() {
            return Err(Error::DomainViolation { eigenvalue: lam });
        }
        values.push(y);
    }
    Ok(es.reassemble(&values))
}

/// b(x) = x (1 + x²)^(-1/2).
pub fn bounded_transform_scalar(x: f64) -> f64 {
    x / (1.0 + x * x).sqrt()
}

pub fn bounded_transform(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    apply_function(h, bounded_transform_scalar)
}

/// An odd, nondecreasing function with limits ±1 at ±∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalizer {
    BoundedTransform,
    Tanh,
    /// (2/π) arctan(x)
    Arctan,
}

impl Normalizer {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Normalizer::BoundedTransform => bounded_transform_scalar(x),
            Normalizer::Tanh => x.tanh(),
            Normalizer::Arctan => x.atan() * std::f64::consts::FRAC_2_PI,
        }
    }

    pub fn apply(self, h: &HermitianMatrix) -> Result<HermitianMatrix> {
        apply_function(h, |x| self.eval(x))
    }
}

/// Orthogonal projection onto eigenvectors with eigenvalues in `[a, b]`.
///
/// `b` may be `f64::INFINITY` (or `a` negative infinity).
pub fn spectral_projection(h: &HermitianMatrix, a: f64, b: f64) -> Result<HermitianMatrix> {
    spectral_projection_with(h, a, b, Tolerances::DEFAULT.boundary_cut)
}

pub fn spectral_projection_with(
    h: &HermitianMatrix,
    a: f64,
    b: f64,
    cut_tolerance: f64,
) -> Result<HermitianMatrix> {
    if !(a < b) {
        return Err(Error::Shape(format!("empty interval [{a}, {b}]")));
    }
    let es = eigh(h)?;
    for &lam in &es.eigenvalues {
        for endpoint in [a, b] {
            if (lam - endpoint).abs() < cut_tolerance {
                return Err(Error::IllConditionedCut {
                    eigenvalue: lam,
                    endpoint,
                    tolerance: cut_tolerance,
                });
            }
        }
    }
    let values: Vec<f64> = es
        .eigenvalues
        .iter()
        .map(|&l| if l >= a && l <= b { 1.0 } else { 0.0 })
        .collect();
    Ok(es.reassemble(&values))
}

/// Number of values in the half-open interval `[lo, hi)`.
pub fn count_in(values: &[f64], lo: f64, hi: f64) -> usize {
    values.iter().filter(|&&v| v >= lo && v < hi).count()
}
