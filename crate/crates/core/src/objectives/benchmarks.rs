//! Two-dimensional benchmark functions with hand-derived derivatives.

use nalgebra::{DMatrix, DVector};

use super::{CriticalKind, CriticalPoint, Objective, Window};
use crate::scalar::Real;

/// Value and derivatives through third order of a scalar function of two
/// variables, at one point.
#[derive(Debug, Clone, Copy)]
struct Jet2<T> {
    v: T,
    d: [T; 2],
    dd: [[T; 2]; 2],
    ddd: [[[T; 2]; 2]; 2],
}

impl<T: Real> Jet2<T> {
    fn zero() -> Self {
        let z = T::zero();
        Self { v: z, d: [z; 2], dd: [[z; 2]; 2], ddd: [[[z; 2]; 2]; 2] }
    }

    /// Jet of `r²` given the jet of `r`.
    fn square(&self) -> Self {
        let two = T::lit(2.0);
        let mut out = Self::zero();
        out.v = self.v * self.v;
        for a in 0..2 {
            out.d[a] = two * self.v * self.d[a];
            for b in 0..2 {
                out.dd[a][b] = two * (self.d[a] * self.d[b] + self.v * self.dd[a][b]);
                for c in 0..2 {
                    out.ddd[a][b][c] = two
                        * (self.dd[a][c] * self.d[b]
                            + self.d[a] * self.dd[b][c]
                            + self.d[c] * self.dd[a][b]
                            + self.v * self.ddd[a][b][c]);
                }
            }
        }
        out
    }

    fn add(mut self, other: &Self) -> Self {
        self.v += other.v;
        for a in 0..2 {
            self.d[a] += other.d[a];
            for b in 0..2 {
                self.dd[a][b] += other.dd[a][b];
                for c in 0..2 {
                    self.ddd[a][b][c] += other.ddd[a][b][c];
                }
            }
        }
        self
    }

    fn gradient(&self) -> DVector<T> {
        DVector::from_row_slice(&self.d)
    }

    fn hessian(&self) -> DMatrix<T> {
        DMatrix::from_fn(2, 2, |i, j| self.dd[i][j])
    }

    /// Reads every entry from its sorted index triple so the slices are
    /// exactly symmetric regardless of summation order.
    fn third(&self) -> Vec<DMatrix<T>> {
        let canonical = |i: usize, j: usize, k: usize| {
            let mut idx = [i, j, k];
            idx.sort_unstable();
            self.ddd[idx[0]][idx[1]][idx[2]]
        };
        (0..2).map(|i| DMatrix::from_fn(2, 2, |j, k| canonical(i, j, k))).collect()
    }
}

fn coords<T: Real>(x: &DVector<T>) -> (T, T) {
    assert_eq!(x.len(), 2, "benchmark objectives are two-dimensional");
    (x[0], x[1])
}

macro_rules! jet_objective {
    ($ty:ident, $name:literal) => {
        impl<T: Real> Objective<T> for $ty<T> {
            fn name(&self) -> &str {
                $name
            }
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, x: &DVector<T>) -> T {
                self.value_at(x)
            }
            fn gradient(&self, x: &DVector<T>) -> DVector<T> {
                self.jet(x).gradient()
            }
            fn hessian(&self, x: &DVector<T>) -> DMatrix<T> {
                self.jet(x).hessian()
            }
            fn third_derivative(&self, x: &DVector<T>) -> Vec<DMatrix<T>> {
                self.jet(x).third()
            }
            fn critical_points(&self) -> &[CriticalPoint<T>] {
                &self.critical
            }
            fn window(&self) -> Window {
                self.window
            }
            fn highlight_global_only(&self) -> bool {
                self.highlight_global_only
            }
        }
    };
}

/// `x² + 2y² - 0.3 cos(3πx) - 0.4 cos(4πy) + 0.7`.
#[derive(Debug, Clone)]
pub struct Bohachevsky<T: Real> {
    critical: Vec<CriticalPoint<T>>,
    window: Window,
    highlight_global_only: bool,
}

impl<T: Real> Bohachevsky<T> {
    pub fn new() -> Self {
        Self {
            critical: vec![CriticalPoint::new(&[0.0, 0.0], CriticalKind::GlobalMin)],
            window: Window::square(2.0),
            highlight_global_only: true,
        }
    }

    fn value_at(&self, x: &DVector<T>) -> T {
        let (x, y) = coords(x);
        let pi = T::pi();
        x * x + T::lit(2.0) * y * y - T::lit(0.3) * (T::lit(3.0) * pi * x).cos() - T::lit(0.4) * (T::lit(4.0) * pi * y).cos()
            + T::lit(0.7)
    }

    // Separable: each coordinate contributes k·u² - a·cos(ω·u).
    fn jet(&self, p: &DVector<T>) -> Jet2<T> {
        let (x, y) = coords(p);
        let pi = T::pi();
        let mut jet = Jet2::zero();
        jet.v = self.value_at(p);
        for (axis, (u, k, a, w)) in [(x, 1.0, 0.3, 3.0), (y, 2.0, 0.4, 4.0)].into_iter().enumerate() {
            let (k, a, w) = (T::lit(k), T::lit(a), T::lit(w) * pi);
            let (s, c) = (w * u).sin_cos();
            jet.d[axis] = T::lit(2.0) * k * u + a * w * s;
            jet.dd[axis][axis] = T::lit(2.0) * k + a * w * w * c;
            jet.ddd[axis][axis][axis] = -a * w * w * w * s;
        }
        jet
    }
}

impl<T: Real> Default for Bohachevsky<T> {
    fn default() -> Self {
        Self::new()
    }
}

jet_objective!(Bohachevsky, "bohachevsky");

/// `sin(x + y) + (x - y)² - 1.5x + 2.5y + 1`.
///
/// Unbounded below; the catalogued minimum is the one inside the usual
/// search box `[-1.5, 4] × [-3, 4]`, at `(1/2 - π/3, -1/2 - π/3)`.
#[derive(Debug, Clone)]
pub struct McCormick<T: Real> {
    critical: Vec<CriticalPoint<T>>,
    window: Window,
    highlight_global_only: bool,
}

impl<T: Real> McCormick<T> {
    pub fn new() -> Self {
        let third = std::f64::consts::PI / 3.0;
        Self {
            critical: vec![CriticalPoint::new(&[0.5 - third, -0.5 - third], CriticalKind::GlobalMin)],
            window: Window::new(-1.5, 4.0, -3.0, 4.0),
            highlight_global_only: true,
        }
    }

    fn value_at(&self, x: &DVector<T>) -> T {
        let (x, y) = coords(x);
        (x + y).sin() + (x - y) * (x - y) - T::lit(1.5) * x + T::lit(2.5) * y + T::one()
    }

    fn jet(&self, p: &DVector<T>) -> Jet2<T> {
        let (x, y) = coords(p);
        let (s, c) = (x + y).sin_cos();
        let two = T::lit(2.0);
        let mut jet = Jet2::zero();
        jet.v = self.value_at(p);
        jet.d = [c + two * (x - y) - T::lit(1.5), c - two * (x - y) + T::lit(2.5)];
        jet.dd = [[two - s, -two - s], [-two - s, two - s]];
        jet.ddd = [[[-c; 2]; 2]; 2];
        jet
    }
}

impl<T: Real> Default for McCormick<T> {
    fn default() -> Self {
        Self::new()
    }
}

jet_objective!(McCormick, "mccormick");

/// `(1.5 - x + xy)² + (2.25 - x + xy²)² + (2.625 - x + xy³)²`.
#[derive(Debug, Clone)]
pub struct Beale<T: Real> {
    critical: Vec<CriticalPoint<T>>,
    window: Window,
    highlight_global_only: bool,
}

impl<T: Real> Beale<T> {
    const OFFSETS: [f64; 3] = [1.5, 2.25, 2.625];

    pub fn new() -> Self {
        Self {
            critical: vec![
                CriticalPoint::new(&[3.0, 0.5], CriticalKind::GlobalMin),
                CriticalPoint::new(&[0.0, 1.0], CriticalKind::Saddle),
            ],
            window: Window::square(4.0),
            highlight_global_only: true,
        }
    }

    fn value_at(&self, p: &DVector<T>) -> T {
        let (x, y) = coords(p);
        let mut yi = T::one();
        Self::OFFSETS.iter().fold(T::zero(), |acc, &a| {
            yi *= y;
            let r = T::lit(a) - x + x * yi;
            acc + r * r
        })
    }

    /// Residual `r = a - x + x·yⁱ` with its derivatives.
    fn residual(a: f64, i: i32, x: T, y: T) -> Jet2<T> {
        let fi = T::lit(i as f64);
        let pow = |e: i32| if e < 0 { T::zero() } else { y.powi(e) };
        let mut r = Jet2::zero();
        r.v = T::lit(a) - x + x * pow(i);
        r.d = [pow(i) - T::one(), fi * x * pow(i - 1)];
        let r_xy = fi * pow(i - 1);
        let r_yy = fi * (fi - T::one()) * x * pow(i - 2);
        r.dd = [[T::zero(), r_xy], [r_xy, r_yy]];
        let r_xyy = fi * (fi - T::one()) * pow(i - 2);
        let r_yyy = fi * (fi - T::one()) * (fi - T::lit(2.0)) * x * pow(i - 3);
        r.ddd = [[[T::zero(), T::zero()], [T::zero(), r_xyy]], [[T::zero(), r_xyy], [r_xyy, r_yyy]]];
        r
    }

    fn jet(&self, p: &DVector<T>) -> Jet2<T> {
        let (x, y) = coords(p);
        Self::OFFSETS
            .iter()
            .zip(1..)
            .fold(Jet2::zero(), |acc, (&a, i)| acc.add(&Self::residual(a, i, x, y).square()))
    }
}

impl<T: Real> Default for Beale<T> {
    fn default() -> Self {
        Self::new()
    }
}

jet_objective!(Beale, "beale");

/// `(x² + y - 11)² + (x + y² - 7)²`.
///
/// All four minima have value zero; `(3, 2)` is the designated one.
#[derive(Debug, Clone)]
pub struct Himmelblau<T: Real> {
    critical: Vec<CriticalPoint<T>>,
    window: Window,
    highlight_global_only: bool,
}

impl<T: Real> Himmelblau<T> {
    pub fn new() -> Self {
        Self {
            // All four minima attain 0; (3, 2) is the designated one.
            critical: vec![
                CriticalPoint::new(&[3.0, 2.0], CriticalKind::GlobalMin),
                CriticalPoint::new(&[-2.805_118_086_952_745, 3.131_312_518_250_573], CriticalKind::GlobalMin),
                CriticalPoint::new(&[-3.779_310_253_377_747, -3.283_185_991_286_169], CriticalKind::GlobalMin),
                CriticalPoint::new(&[3.584_428_340_330_492, -1.848_126_526_964_404], CriticalKind::GlobalMin),
            ],
            window: Window::square(6.0),
            highlight_global_only: false,
        }
    }

    fn value_at(&self, p: &DVector<T>) -> T {
        let (x, y) = coords(p);
        let r1 = x * x + y - T::lit(11.0);
        let r2 = x + y * y - T::lit(7.0);
        r1 * r1 + r2 * r2
    }

    fn jet(&self, p: &DVector<T>) -> Jet2<T> {
        let (x, y) = coords(p);
        let (zero, one, two) = (T::zero(), T::one(), T::lit(2.0));
        let mut r1 = Jet2::zero();
        r1.v = x * x + y - T::lit(11.0);
        r1.d = [two * x, one];
        r1.dd = [[two, zero], [zero, zero]];
        let mut r2 = Jet2::zero();
        r2.v = x + y * y - T::lit(7.0);
        r2.d = [one, two * y];
        r2.dd = [[zero, zero], [zero, two]];
        r1.square().add(&r2.square())
    }
}

impl<T: Real> Default for Himmelblau<T> {
    fn default() -> Self {
        Self::new()
    }
}

jet_objective!(Himmelblau, "himmelblau");
