//! Objective functions with derivatives through third order.

mod benchmarks;
mod finite_difference;
mod polynomial;

pub use benchmarks::{Beale, Bohachevsky, Himmelblau, McCormick};
pub use finite_difference::{FdSteps, FiniteDifferenceObjective};
pub use polynomial::{CubicObjective, Quadratic, Quartic};

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// A scalar function exposing value, gradient, Hessian and third-derivative
/// evaluations.
///
/// The third derivative is returned as `n` slices `H₁..Hₙ` where
/// `(Hᵢ)ⱼₖ = ∂³f/∂xᵢ∂xⱼ∂xₖ`.
pub trait Objective<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<T>) -> T;

    fn gradient(&self, x: &DVector<T>) -> DVector<T>;

    fn hessian(&self, x: &DVector<T>) -> DMatrix<T>;

    fn third_derivative(&self, x: &DVector<T>) -> Vec<DMatrix<T>>;

    /// Known critical points. The first global minimum listed is the
    /// designated one used for fractal colouring.
    fn critical_points(&self) -> &[CriticalPoint<T>] {
        &[]
    }

    /// Default plotting / fractal window.
    fn window(&self) -> Window {
        Window::square(2.0)
    }

    /// Whether figures highlight only the designated global minimum.
    fn highlight_global_only(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriticalKind {
    GlobalMin,
    LocalMin,
    Saddle,
}

impl CriticalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CriticalKind::GlobalMin => "global-min",
            CriticalKind::LocalMin => "local-min",
            CriticalKind::Saddle => "saddle",
        }
    }

    pub fn is_minimum(self) -> bool {
        matches!(self, CriticalKind::GlobalMin | CriticalKind::LocalMin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint<T: Real> {
    pub point: DVector<T>,
    pub kind: CriticalKind,
}

impl<T: Real> CriticalPoint<T> {
    pub fn new(coords: &[f64], kind: CriticalKind) -> Self {
        Self { point: DVector::from_iterator(coords.len(), coords.iter().map(|&v| T::lit(v))), kind }
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self { x_min, x_max, y_min, y_max }
    }

    /// `[-half, half]²`.
    pub fn square(half: f64) -> Self {
        Self::new(-half, half, -half, half)
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.x_min < self.x_max && self.y_min < self.y_max)
            || ![self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 6] = ["bohachevsky", "mccormick", "beale", "himmelblau", "quadratic", "quartic"];

/// Looks up a built-in objective by its lowercase name.
pub fn by_name<T: Real>(name: &str) -> Option<Box<dyn Objective<T>>> {
    let f: Box<dyn Objective<T>> = match name {
        "bohachevsky" => Box::new(Bohachevsky::new()),
        "mccormick" => Box::new(McCormick::new()),
        "beale" => Box::new(Beale::new()),
        "himmelblau" => Box::new(Himmelblau::new()),
        "quadratic" => Box::new(Quadratic::new(2)),
        "quartic" => Box::new(Quartic::new(2)),
        _ => return None,
    };
    Some(f)
}

/// The designated global minimum of `f`, if catalogued.
pub fn designated_minimum<T: Real, F: Objective<T> + ?Sized>(f: &F) -> Option<&CriticalPoint<T>> {
    f.critical_points().iter().find(|p| p.kind == CriticalKind::GlobalMin)
}

#[cfg(test)]
pub(crate) mod testing {
    //! Finite-difference agreement checks shared by the objective tests.

    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }

    /// Largest relative disagreement between each analytic derivative and the
    /// central difference of the next-lower-order analytic evaluator.
    pub fn fd_disagreement(f: &dyn Objective<f64>, x: &DVector<f64>) -> f64 {
        let n = f.dim();
        let h = 1e-6;
        let g = f.gradient(x);
        let hess = f.hessian(x);
        let third = f.third_derivative(x);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            worst = worst.max(rel(g[i], (f.value(&xp) - f.value(&xm)) / (2.0 * h)));
            let dg = (f.gradient(&xp) - f.gradient(&xm)) / (2.0 * h);
            let dh = (f.hessian(&xp) - f.hessian(&xm)) / (2.0 * h);
            for j in 0..n {
                worst = worst.max(rel(hess[(j, i)], dg[j]));
                for k in 0..n {
                    worst = worst.max(rel(third[i][(j, k)], dh[(j, k)]));
                }
            }
        }
        worst
    }

    pub fn random_window_points(w: Window, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| DVector::from_vec(vec![rng.gen_range(w.x_min..w.x_max), rng.gen_range(w.y_min..w.y_max)]))
            .collect()
    }

    pub fn assert_tensor_symmetric(t: &[DMatrix<f64>], tol: f64) {
        let n = t.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = t[i][(j, k)];
                    assert!((v - t[j][(i, k)]).abs() <= tol && (v - t[k][(i, j)]).abs() <= tol);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    #[test]
    fn every_named_objective_passes_fd_agreement() {
        for name in NAMES {
            let f = by_name::<f64>(name).unwrap();
            for x in random_window_points(f.window(), 20, 7) {
                let err = fd_disagreement(f.as_ref(), &x);
                assert!(err <= 1e-5, "{name} at {x:?}: {err:e}");
                assert_tensor_symmetric(&f.third_derivative(&x), 0.0);
            }
        }
    }

    #[test]
    fn catalogued_minima_are_stationary() {
        for name in NAMES {
            let f = by_name::<f64>(name).unwrap();
            for p in f.critical_points() {
                let g = f.gradient(&p.point).norm();
                assert!(g <= 1e-8, "{name} {:?}: |grad| = {g:e}", p.point);
            }
        }
    }

    #[test]
    fn unknown_name_is_none() {
        assert!(by_name::<f64>("rosenbrock").is_none());
    }

    #[test]
    fn windows() {
        assert!(Window::new(0.0, 0.0, 0.0, 1.0).is_degenerate());
        assert!(!Window::square(1.0).is_degenerate());
        assert!(Window::square(1.0).contains(1.0, -1.0));
    }
}
