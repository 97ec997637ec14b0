use num_traits::{One, Zero};
use std::ops::{Add, Mul};

/// Dense polynomial coefficients; index `k` holds the coefficient of `z^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs<T = f64> {
    coeffs: Vec<T>,
}

impl<T> PolyCoeffs<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl<T> PolyCoeffs<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    /// Horner evaluation.
    pub fn eval(&self, z: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * z.clone() + c.clone())
    }

    /// Exact product (within the arithmetic of `T`).
    pub fn mul(&self, other: &Self) -> Self {
        if self.is_empty() || other.is_empty() {
            return Self::new(Vec::new());
        }
        let mut out = vec![T::zero(); self.len() + other.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }
}

impl From<Vec<f64>> for PolyCoeffs<f64> {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

/// Coefficients of `base(z)^p` by repeated exact multiplication.
///
/// The result has `p * (len(base) - 1) + 1` entries; `p = 0` yields `[1]`.
/// Generic so the same routine serves plain `f64`, [`super::DoubleDouble`]
/// and exact rationals.
///
/// # Panics
///
/// Panics if `base` is empty.
pub fn poly_power_coefficients<T>(base: &PolyCoeffs<T>, p: u32) -> PolyCoeffs<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    assert!(!base.is_empty(), "polynomial base must have at least one coefficient");
    let mut acc = PolyCoeffs::new(vec![T::one()]);
    for _ in 0..p {
        acc = acc.mul(base);
    }
    acc
}
