use nalgebra::{DMatrix, DVector};

use super::{CriticalKind, CriticalPoint, Objective, Window};
use crate::cubic::CubicModel;
use crate::scalar::Real;

/// Objective backed by a cubic polynomial, evaluated in the model's own
/// coordinates.
#[derive(Debug, Clone)]
pub struct CubicObjective<T: Real> {
    model: CubicModel<T>,
    name: String,
}

impl<T: Real> CubicObjective<T> {
    pub fn new(model: CubicModel<T>) -> Self {
        Self { model, name: "cubic".into() }
    }

    pub fn model(&self) -> &CubicModel<T> {
        &self.model
    }
}

impl<T: Real> Objective<T> for CubicObjective<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn value(&self, x: &DVector<T>) -> T {
        self.model.eval_unchecked(x)
    }

    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        self.model.gradient_unchecked(x)
    }

    fn hessian(&self, x: &DVector<T>) -> DMatrix<T> {
        self.model.hessian_unchecked(x)
    }

    fn third_derivative(&self, _x: &DVector<T>) -> Vec<DMatrix<T>> {
        self.model.tensor().to_vec()
    }
}

/// `½‖x‖²`, minimized at the origin.
#[derive(Debug, Clone)]
pub struct Quadratic<T: Real> {
    dim: usize,
    critical: Vec<CriticalPoint<T>>,
}

impl<T: Real> Quadratic<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, critical: vec![CriticalPoint::new(&vec![0.0; dim], CriticalKind::GlobalMin)] }
    }
}

impl<T: Real> Objective<T> for Quadratic<T> {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<T>) -> T {
        x.dot(x) / T::lit(2.0)
    }

    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        x.clone()
    }

    fn hessian(&self, _x: &DVector<T>) -> DMatrix<T> {
        DMatrix::identity(self.dim, self.dim)
    }

    fn third_derivative(&self, _x: &DVector<T>) -> Vec<DMatrix<T>> {
        vec![DMatrix::zeros(self.dim, self.dim); self.dim]
    }

    fn critical_points(&self) -> &[CriticalPoint<T>] {
        &self.critical
    }
}

/// `Σᵢ xᵢ⁴ + xᵢ²`: strongly convex, minimized at the origin.
#[derive(Debug, Clone)]
pub struct Quartic<T: Real> {
    dim: usize,
    critical: Vec<CriticalPoint<T>>,
}

impl<T: Real> Quartic<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, critical: vec![CriticalPoint::new(&vec![0.0; dim], CriticalKind::GlobalMin)] }
    }
}

impl<T: Real> Objective<T> for Quartic<T> {
    fn name(&self) -> &str {
        "quartic"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<T>) -> T {
        x.iter().fold(T::zero(), |acc, &v| acc + v * v * (v * v + T::one()))
    }

    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        x.map(|v| T::lit(4.0) * v * v * v + T::lit(2.0) * v)
    }

    fn hessian(&self, x: &DVector<T>) -> DMatrix<T> {
        DMatrix::from_diagonal(&x.map(|v| T::lit(12.0) * v * v + T::lit(2.0)))
    }

    fn third_derivative(&self, x: &DVector<T>) -> Vec<DMatrix<T>> {
        (0..self.dim)
            .map(|i| {
                let mut h = DMatrix::zeros(self.dim, self.dim);
                h[(i, i)] = T::lit(24.0) * x[i];
                h
            })
            .collect()
    }

    fn critical_points(&self) -> &[CriticalPoint<T>] {
        &self.critical
    }

    fn window(&self) -> Window {
        Window::square(1.0)
    }
}
