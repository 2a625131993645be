use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::{CriticalPoint, Objective, Window};
use crate::scalar::Real;

/// Step sizes for the gradient, Hessian and third-derivative stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps<T> {
    pub gradient: T,
    pub hessian: T,
    pub third: T,
}

impl<T: Real> Default for FdSteps<T> {
    fn default() -> Self {
        Self { gradient: T::lit(1e-5), hessian: T::lit(1e-4), third: T::lit(1e-3) }
    }
}

type ValueFn<T> = Box<dyn Fn(&DVector<T>) -> T + Send + Sync>;

/// Wraps a value-only function; every derivative comes from central
/// differences of the value.
///
/// Mixed derivatives use products of the one-dimensional central operators
/// `δᵢ f = f(x + h eᵢ) - f(x - h eᵢ)`, so the Hessian and tensor stencils are
/// symmetric in their indices by construction.
pub struct FiniteDifferenceObjective<T: Real> {
    name: String,
    dim: usize,
    value_fn: ValueFn<T>,
    steps: FdSteps<T>,
    critical: Vec<CriticalPoint<T>>,
    window: Window,
}

impl<T: Real> FiniteDifferenceObjective<T> {
    pub fn new(name: impl Into<String>, dim: usize, value_fn: impl Fn(&DVector<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            dim,
            value_fn: Box::new(value_fn),
            steps: FdSteps::default(),
            critical: Vec::new(),
            window: Window::square(2.0),
        }
    }

    pub fn with_steps(mut self, steps: FdSteps<T>) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }

    pub fn with_critical_points(mut self, points: Vec<CriticalPoint<T>>) -> Self {
        self.critical = points;
        self
    }

    /// Sum over sign patterns of `f(x + h Σ sₐ e_{idx[a]})` weighted by `Π sₐ`.
    fn signed_sum(&self, x: &DVector<T>, idx: &[usize], h: T) -> T {
        let patterns = 1usize << idx.len();
        let mut acc = T::zero();
        let mut probe = x.clone();
        for mask in 0..patterns {
            probe.copy_from(x);
            let mut sign = T::one();
            for (bit, &i) in idx.iter().enumerate() {
                if mask & (1 << bit) == 0 {
                    probe[i] += h;
                } else {
                    probe[i] -= h;
                    sign = -sign;
                }
            }
            acc += sign * (self.value_fn)(&probe);
        }
        acc
    }
}

impl<T: Real> fmt::Debug for FiniteDifferenceObjective<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteDifferenceObjective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("steps", &self.steps)
            .finish_non_exhaustive()
    }
}

impl<T: Real> Objective<T> for FiniteDifferenceObjective<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<T>) -> T {
        (self.value_fn)(x)
    }

    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        let h = self.steps.gradient;
        DVector::from_fn(self.dim, |i, _| self.signed_sum(x, &[i], h) / (T::lit(2.0) * h))
    }

    fn hessian(&self, x: &DVector<T>) -> DMatrix<T> {
        let h = self.steps.hessian;
        let denom = T::lit(4.0) * h * h;
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.signed_sum(x, &[i, j], h) / denom;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    fn third_derivative(&self, x: &DVector<T>) -> Vec<DMatrix<T>> {
        let n = self.dim;
        let h = self.steps.third;
        let denom = T::lit(8.0) * h * h * h;
        let mut out = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = self.signed_sum(x, &[i, j, k], h) / denom;
                    for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        out[a][(b, c)] = v;
                    }
                }
            }
        }
        out
    }

    fn critical_points(&self) -> &[CriticalPoint<T>] {
        &self.critical
    }

    fn window(&self) -> Window {
        self.window
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::testing::{assert_tensor_symmetric, random_window_points};
    use crate::objectives::Bohachevsky;

    #[test]
    fn reproduces_analytic_bohachevsky_gradient() {
        let analytic = Bohachevsky::<f64>::new();
        let a = analytic.clone();
        let fd = FiniteDifferenceObjective::new("bohachevsky-fd", 2, move |x| a.value(x));
        for x in random_window_points(analytic.window(), 20, 3) {
            let diff = (fd.gradient(&x) - analytic.gradient(&x)).amax();
            let scale = analytic.gradient(&x).amax().max(1.0);
            assert!(diff / scale <= 1e-5, "{diff:e}");
            let dh = (fd.hessian(&x) - analytic.hessian(&x)).amax();
            assert!(dh / analytic.hessian(&x).amax().max(1.0) <= 1e-5, "{dh:e}");
            assert_tensor_symmetric(&fd.third_derivative(&x), 1e-6);
        }
    }

    #[test]
    fn constant_function_has_zero_derivatives() {
        let f = FiniteDifferenceObjective::new("const", 3, |_: &DVector<f64>| 4.5);
        let x = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        assert_eq!(f.gradient(&x), DVector::zeros(3));
        assert_eq!(f.hessian(&x), DMatrix::zeros(3, 3));
        assert!(f.third_derivative(&x).iter().all(|h| h == &DMatrix::zeros(3, 3)));
    }

    #[test]
    fn quadratic_has_vanishing_tensor() {
        let f = FiniteDifferenceObjective::new("half-norm", 2, |x: &DVector<f64>| 0.5 * x.dot(x));
        let x = DVector::from_vec(vec![0.7, -1.3]);
        for slice in f.third_derivative(&x) {
            assert!(slice.amax() <= 1e-4);
        }
        assert!((f.hessian(&x) - DMatrix::identity(2, 2)).amax() <= 1e-6);
    }
}
