//! Dense n-variate cubic polynomials.
//!
//! A [`CubicModel`] stores
//!
//! ```text
//! p(x) = 1/6 Σᵢ xᵢ xᵀHᵢx + 1/2 xᵀQx + bᵀx + c
//! ```
//!
//! with the third-derivative tensor kept as `n` symmetric slices `H₁..Hₙ`
//! satisfying `(Hᵢ)ⱼₖ = (Hⱼ)ᵢₖ = (Hₖ)ᵢⱼ`. With that convention `Q`, `b` and
//! `c` are the Hessian, gradient and value at the origin, and `Hᵢ` holds the
//! third partial derivatives `∂³p/∂xᵢ∂xⱼ∂xₖ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::scalar::Real;

/// Relative tolerance used when validating tensor and matrix symmetry.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CubicModel<T: Real> {
    tensor: Vec<DMatrix<T>>,
    quadratic: DMatrix<T>,
    linear: DVector<T>,
    constant: T,
    /// Expansion point in the caller's coordinates; the model itself is
    /// written in the displacement from this point.
    center: DVector<T>,
}

impl<T: Real> CubicModel<T> {
    /// Builds a model, rejecting inconsistent dimensions, non-finite entries
    /// and tensors that violate the slice symmetry.
    pub fn new(
        tensor: Vec<DMatrix<T>>,
        quadratic: DMatrix<T>,
        linear: DVector<T>,
        constant: T,
    ) -> Result<Self> {
        let n = linear.len();
        if n == 0 {
            return Err(Error::InvalidProblem("cubic model needs at least one variable".into()));
        }
        check_square(&quadratic, n)?;
        if tensor.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: tensor.len() });
        }
        for slice in &tensor {
            check_square(slice, n)?;
        }
        let finite = tensor.iter().flat_map(|h| h.iter()).all(|v| v.is_finite())
            && quadratic.iter().all(|v| v.is_finite())
            && linear.iter().all(|v| v.is_finite())
            && constant.is_finite();
        if !finite {
            return Err(Error::NonFinite { what: "cubic model coefficient" });
        }
        validate_matrix_symmetry(&quadratic)?;
        validate_tensor_symmetry(&tensor)?;
        Ok(Self { tensor, quadratic, linear, constant, center: DVector::zeros(n) })
    }

    /// A model with vanishing third-order part.
    pub fn quadratic(quadratic: DMatrix<T>, linear: DVector<T>, constant: T) -> Result<Self> {
        let n = linear.len();
        let tensor = vec![DMatrix::zeros(n, n); n];
        Self::new(tensor, quadratic, linear, constant)
    }

    /// Attaches the expansion point the model's coordinates are measured from.
    pub fn with_center(mut self, center: DVector<T>) -> Result<Self> {
        if center.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: center.len() });
        }
        self.center = center;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn tensor(&self) -> &[DMatrix<T>] {
        &self.tensor
    }

    pub fn quadratic_part(&self) -> &DMatrix<T> {
        &self.quadratic
    }

    pub fn linear_part(&self) -> &DVector<T> {
        &self.linear
    }

    pub fn constant(&self) -> T {
        self.constant
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    /// Maps a point in model coordinates back to the caller's coordinates.
    pub fn to_original(&self, displacement: &DVector<T>) -> DVector<T> {
        &self.center + displacement
    }

    /// `true` when every tensor slice is identically zero.
    pub fn is_quadratic(&self) -> bool {
        self.tensor.iter().all(|h| h.iter().all(|v| *v == T::zero()))
    }

    /// Same model with `Q` replaced by `Q + σI`.
    pub fn shifted(&self, sigma: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.quadratic[(i, i)] += sigma;
        }
        out
    }

    pub fn eval(&self, x: &DVector<T>) -> Result<T> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub fn gradient(&self, x: &DVector<T>) -> Result<DVector<T>> {
        self.check_point(x)?;
        Ok(self.gradient_unchecked(x))
    }

    pub fn hessian(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_point(x)?;
        Ok(self.hessian_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &DVector<T>) -> T {
        let cubic = self
            .tensor
            .iter()
            .zip(x.iter())
            .fold(T::zero(), |acc, (h, &xi)| acc + xi * x.dot(&(h * x)));
        cubic / T::lit(6.0) + x.dot(&(&self.quadratic * x)) / T::lit(2.0) + self.linear.dot(x) + self.constant
    }

    pub(crate) fn gradient_unchecked(&self, x: &DVector<T>) -> DVector<T> {
        let mut g = weighted_slices(&self.tensor, x) * x;
        g /= T::lit(2.0);
        g += &self.quadratic * x;
        g += &self.linear;
        g
    }

    pub(crate) fn hessian_unchecked(&self, x: &DVector<T>) -> DMatrix<T> {
        weighted_slices(&self.tensor, x) + &self.quadratic
    }

    fn check_point(&self, x: &DVector<T>) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() })
        }
    }
}

/// `Σᵢ xᵢHᵢ`.
pub(crate) fn weighted_slices<T: Real>(tensor: &[DMatrix<T>], x: &DVector<T>) -> DMatrix<T> {
    let n = x.len();
    let mut acc = DMatrix::zeros(n, n);
    for (h, &xi) in tensor.iter().zip(x.iter()) {
        if xi != T::zero() {
            acc += h * xi;
        }
    }
    acc
}

/// Contracts the tensor with two vectors: `Σᵢ xᵢHᵢy`.
///
/// For a symmetric tensor this equals `Σᵢ yᵢHᵢx` and the stacked vector
/// `(xᵀH₁y, …, xᵀHₙy)`.
pub fn tensor_apply<T: Real>(tensor: &[DMatrix<T>], x: &DVector<T>, y: &DVector<T>) -> Result<DVector<T>> {
    let n = tensor.len();
    for len in [x.len(), y.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    for slice in tensor {
        check_square(slice, n)?;
    }
    Ok(weighted_slices(tensor, x) * y)
}

/// Third-order Taylor expansion of `f` around `center`, in displacement
/// coordinates `δ = x - center`.
pub fn taylor3<T: Real, F: Objective<T> + ?Sized>(f: &F, center: &DVector<T>) -> Result<CubicModel<T>> {
    let n = f.dim();
    if center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: center.len() });
    }
    let value = f.value(center);
    let gradient = f.gradient(center);
    let hessian = f.hessian(center);
    let tensor = f.third_derivative(center);
    if !value.is_finite() {
        return Err(Error::NonFinite { what: "objective value" });
    }
    if gradient.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: gradient.len() });
    }
    // Analytic and finite-difference evaluators may disagree with exact
    // symmetry by rounding; project before validating.
    let hessian = symmetrize(&hessian);
    let tensor = symmetrize_tensor(&tensor)?;
    CubicModel::new(tensor, hessian, gradient, value)?.with_center(center.clone())
}

/// Univariate cubic `a·x³ + b·x² + c·x + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnivariateCubic<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> UnivariateCubic<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Self { a, b, c, d }
    }

    pub fn eval(&self, x: T) -> T {
        ((self.a * x + self.b) * x + self.c) * x + self.d
    }

    pub fn derivative(&self, x: T) -> T {
        (T::lit(3.0) * self.a * x + T::lit(2.0) * self.b) * x + self.c
    }

    pub fn second_derivative(&self, x: T) -> T {
        T::lit(6.0) * self.a * x + T::lit(2.0) * self.b
    }

    /// Location of the local minimum, if there is one.
    ///
    /// Exists iff `b² - 3ac ≥ 0` (for `a ≠ 0`) or `b > 0` (for `a = 0`).
    /// The root `-c / (b + √(b² - 3ac))` is used whenever `b ≥ 0`; for
    /// `b < 0` the algebraically equal `(-b + √(b² - 3ac)) / 3a` avoids the
    /// cancellation in the denominator.
    pub fn local_min(&self) -> Option<T> {
        let Self { a, b, c, .. } = *self;
        let zero = T::zero();
        if a == zero {
            // Quadratic or lower: a minimum needs positive curvature.
            return if b > zero { Some(-c / (T::lit(2.0) * b)) } else { None };
        }
        let disc = b * b - T::lit(3.0) * a * c;
        if disc < zero {
            return None;
        }
        let root = disc.sqrt();
        if b >= zero {
            let denom = b + root;
            if denom != zero {
                return Some(-c / denom);
            }
        }
        Some((-b + root) / (T::lit(3.0) * a))
    }

    /// Position of the inflection point `-b / 3a` (absent for `a = 0`).
    pub fn inflection_point(&self) -> Option<T> {
        (self.a != T::zero()).then(|| -self.b / (T::lit(3.0) * self.a))
    }
}

fn check_square<T: Real>(m: &DMatrix<T>, n: usize) -> Result<()> {
    if m.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
    }
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
    }
    Ok(())
}

fn scale_of<'a, T: Real>(values: impl Iterator<Item = &'a T>) -> T {
    values.fold(T::one(), |acc, v| acc.max(v.abs()))
}

fn validate_matrix_symmetry<T: Real>(m: &DMatrix<T>) -> Result<()> {
    let tol = T::tolerance(SYMMETRY_TOL) * scale_of(m.iter());
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let dev = (m[(i, j)] - m[(j, i)]).abs();
            if dev > tol {
                return Err(Error::AsymmetricMatrix { row: i, col: j, deviation: dev.as_f64() });
            }
        }
    }
    Ok(())
}

fn validate_tensor_symmetry<T: Real>(tensor: &[DMatrix<T>]) -> Result<()> {
    let tol = T::tolerance(SYMMETRY_TOL) * scale_of(tensor.iter().flat_map(|h| h.iter()));
    let n = tensor.len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = tensor[i][(j, k)];
                let dev = (v - tensor[j][(i, k)]).abs().max((v - tensor[k][(i, j)]).abs());
                if dev > tol {
                    return Err(Error::AsymmetricTensor { slice: i, row: j, col: k, deviation: dev.as_f64() });
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) / T::lit(2.0)
}

/// Averages each tensor entry over the permutations of its indices.
fn symmetrize_tensor<T: Real>(tensor: &[DMatrix<T>]) -> Result<Vec<DMatrix<T>>> {
    let n = tensor.len();
    for slice in tensor {
        check_square(slice, n)?;
    }
    let mut out = vec![DMatrix::zeros(n, n); n];
    let six = T::lit(6.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let sum = tensor[i][(j, k)]
                    + tensor[i][(k, j)]
                    + tensor[j][(i, k)]
                    + tensor[j][(k, i)]
                    + tensor[k][(i, j)]
                    + tensor[k][(j, i)];
                out[i][(j, k)] = sum / six;
            }
        }
    }
    Ok(out)
}
