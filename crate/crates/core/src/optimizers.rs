//! Third-order Newton iteration and the reference methods it is compared
//! against: undamped Newton, fixed-step gradient descent and gradient
//! descent with a quadratic-fit line search.
//!
//! Every optimizer returns an [`OptimizerTrace`]. Step failures and
//! iteration budgets are recorded as a [`Termination`], not raised.

use std::fmt;
use std::io;

use nalgebra::DVector;

use crate::cubic::taylor3;
use crate::error::{Error, Result};
use crate::localmin::{continue_shift_ladder, find_local_min, LocalMinConfig, Outcome};
use crate::objectives::Objective;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T: Real> {
    /// Stop once `‖∇f‖ ≤ grad_eps`.
    pub grad_eps: T,
    pub max_iters: usize,
    /// Gradient-descent step `c`.
    pub step_size: T,
    /// Identity shifts tried in order by the third-order method; starts at 0.
    pub shifts: Vec<T>,
    /// Take second-order points that are not certified strict minima as
    /// iterates. When off, such a step ends the run with `StepFailed`.
    pub accept_second_order_points: bool,
    /// When the unshifted relaxation solves but certifies no second-order
    /// point (`φ > phi_tol`), move to the `x` part of its minimizer instead
    /// of climbing the shift ladder. Shifts are then only used when the
    /// unshifted program yields no solution at all.
    pub use_relaxation_point: bool,
    /// Runs whose iterate leaves this box (infinity norm) stop with `MaxIterations`.
    pub divergence_bound: T,
    /// Newton steps fail when the Hessian condition estimate exceeds this.
    pub max_condition: T,
    pub local_min: LocalMinConfig<T>,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            grad_eps: T::tolerance(1e-6),
            max_iters: 100,
            step_size: T::lit(0.01),
            shifts: vec![T::zero(), T::lit(5.0), T::lit(10.0)],
            accept_second_order_points: true,
            use_relaxation_point: true,
            divergence_bound: T::lit(1e8),
            max_condition: T::lit(1e14),
            local_min: LocalMinConfig::default(),
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_eps > T::zero()) || !self.grad_eps.is_finite() {
            return Err(Error::InvalidProblem("grad_eps must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidProblem("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    fn validate_step(&self) -> Result<()> {
        if !(self.step_size > T::zero()) || !self.step_size.is_finite() {
            return Err(Error::InvalidProblem("step size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Converged,
    MaxIterations,
    StepFailed,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::StepFailed => "step-failed",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an iterate was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum StepNote<T> {
    Start,
    /// `outcome` is the subproblem classification, or `relaxation` when the
    /// step went to a relaxation point.
    ThirdOrder { shift: T, outcome: &'static str, sdp_iterations: usize },
    Newton,
    Gradient { step: T },
    /// `trial` is the stencil spacing after backtracking, `taken` the step
    /// length moved along `-∇f`.
    QuadraticFit { trial: T, taken: T, vertex: bool, halvings: usize },
}

impl<T: Real> fmt::Display for StepNote<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepNote::Start => f.write_str("start"),
            StepNote::ThirdOrder { shift, outcome, sdp_iterations } => {
                write!(f, "shift={} outcome={outcome} sdp_iters={sdp_iterations}", shift.as_f64())
            }
            StepNote::Newton => f.write_str("newton"),
            StepNote::Gradient { step } => write!(f, "step={}", step.as_f64()),
            StepNote::QuadraticFit { trial, taken, vertex, halvings } => write!(
                f,
                "trial={} taken={} {} halvings={halvings}",
                trial.as_f64(),
                taken.as_f64(),
                if *vertex { "vertex" } else { "sample" }
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTrace<T: Real> {
    /// `x⁰..x^K`.
    pub iterates: Vec<DVector<T>>,
    pub grad_norms: Vec<T>,
    pub values: Vec<T>,
    /// One note per iterate; the first is always `Start`.
    pub notes: Vec<StepNote<T>>,
    pub termination: Termination,
    /// Why the last attempted step failed, when it did.
    pub failure: Option<String>,
}

impl<T: Real> OptimizerTrace<T> {
    fn start<F: Objective<T> + ?Sized>(f: &F, x0: &DVector<T>) -> Self {
        let mut t = Self {
            iterates: Vec::new(),
            grad_norms: Vec::new(),
            values: Vec::new(),
            notes: Vec::new(),
            termination: Termination::MaxIterations,
            failure: None,
        };
        t.push(f, x0.clone(), StepNote::Start);
        t
    }

    fn push<F: Objective<T> + ?Sized>(&mut self, f: &F, x: DVector<T>, note: StepNote<T>) {
        self.grad_norms.push(f.gradient(&x).norm());
        self.values.push(f.value(&x));
        self.iterates.push(x);
        self.notes.push(note);
    }

    /// Number of steps taken, `K`.
    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn final_point(&self) -> &DVector<T> {
        self.iterates.last().expect("trace holds x⁰")
    }

    pub fn final_grad_norm(&self) -> T {
        *self.grad_norms.last().expect("trace holds x⁰")
    }

    pub fn final_value(&self) -> T {
        *self.values.last().expect("trace holds x⁰")
    }

    /// Writes `iter,x0..x{n-1},f,grad_norm,annotation`, one row per iterate.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.iterates[0].len();
        let xs: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        writeln!(w, "iter,{},f,grad_norm,annotation", xs.join(","))?;
        for (k, x) in self.iterates.iter().enumerate() {
            let coords: Vec<String> = x.iter().map(|v| format!("{:e}", v.as_f64())).collect();
            writeln!(
                w,
                "{k},{},{:e},{:e},{}",
                coords.join(","),
                self.values[k].as_f64(),
                self.grad_norms[k].as_f64(),
                self.notes[k]
            )?;
        }
        Ok(())
    }
}

/// What a single step produced.
enum Step<T> {
    Moved(DVector<T>, StepNote<T>),
    Failed(String),
}

/// Shared outer loop: convergence test, budget, divergence guard.
fn drive<T, F, S>(f: &F, x0: &DVector<T>, cfg: &OptimizerConfig<T>, mut step: S) -> Result<OptimizerTrace<T>>
where
    T: Real,
    F: Objective<T> + ?Sized,
    S: FnMut(&DVector<T>, &DVector<T>) -> Result<Step<T>>,
{
    cfg.validate()?;
    if x0.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: x0.len() });
    }
    let mut trace = OptimizerTrace::start(f, x0);
    loop {
        let g = trace.final_grad_norm();
        if g <= cfg.grad_eps {
            trace.termination = Termination::Converged;
            break;
        }
        if !g.is_finite() || trace.final_point().amax() > cfg.divergence_bound || trace.iterations() >= cfg.max_iters
        {
            trace.termination = Termination::MaxIterations;
            break;
        }
        let x = trace.final_point().clone();
        let grad = f.gradient(&x);
        match step(&x, &grad)? {
            Step::Moved(next, note) => trace.push(f, next, note),
            Step::Failed(why) => {
                trace.termination = Termination::StepFailed;
                trace.failure = Some(why);
                break;
            }
        }
    }
    Ok(trace)
}

/// Moves to the local minimum of the third-order Taylor model at each
/// iterate.
///
/// When the unshifted model has no second-order point the step goes to the
/// relaxation point if allowed (see [`OptimizerConfig::use_relaxation_point`]),
/// otherwise the Hessian is shifted by `σI` along `cfg.shifts`.
pub fn third_order_newton<T: Real, F: Objective<T> + ?Sized>(
    f: &F,
    x0: &DVector<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptimizerTrace<T>> {
    if cfg.shifts.first() != Some(&T::zero()) {
        return Err(Error::InvalidProblem("shift ladder must start with 0".into()));
    }
    drive(f, x0, cfg, |x, _| {
        let model = match taylor3(f, x) {
            Ok(m) => m,
            Err(e) => return Ok(Step::Failed(e.to_string())),
        };
        let unshifted = find_local_min(&model, &cfg.local_min)?;
        let r = if unshifted.outcome.point().is_some() {
            unshifted
        } else if let (true, Some(p)) = (cfg.use_relaxation_point, &unshifted.relaxation_point) {
            let note = StepNote::ThirdOrder {
                shift: T::zero(),
                outcome: "relaxation",
                sdp_iterations: unshifted.sdp_iterations,
            };
            return Ok(Step::Moved(model.to_original(p), note));
        } else {
            continue_shift_ladder(&model, unshifted, &cfg.shifts[1..], &cfg.local_min)?
        };
        let note = StepNote::ThirdOrder {
            shift: r.shift_used,
            outcome: r.outcome.as_str(),
            sdp_iterations: r.sdp_iterations,
        };
        match &r.outcome {
            Outcome::LocalMin(d) => Ok(Step::Moved(model.to_original(d), note)),
            Outcome::SecondOrderPoint(d) if cfg.accept_second_order_points => {
                Ok(Step::Moved(model.to_original(d), note))
            }
            other => Ok(Step::Failed(format!("subproblem: {}", other.as_str()))),
        }
    })
}

/// Undamped Newton: `x − [∇²f]⁻¹ ∇f`.
pub fn second_order_newton<T: Real, F: Objective<T> + ?Sized>(
    f: &F,
    x0: &DVector<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptimizerTrace<T>> {
    drive(f, x0, cfg, |x, g| {
        let h = f.hessian(x);
        let h = (&h + h.transpose()) * T::lit(0.5);
        let eig = h.clone().symmetric_eigenvalues();
        let largest = eig.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let smallest = eig.iter().fold(T::max_value().unwrap(), |a, v| a.min(v.abs()));
        if !largest.is_finite() || !(smallest * cfg.max_condition > largest) {
            return Ok(Step::Failed("singular Hessian".into()));
        }
        match h.lu().solve(g) {
            Some(d) => Ok(Step::Moved(x - d, StepNote::Newton)),
            None => Ok(Step::Failed("singular Hessian".into())),
        }
    })
}

/// `x − c ∇f` with constant `c = cfg.step_size`.
pub fn gradient_descent_fixed<T: Real, F: Objective<T> + ?Sized>(
    f: &F,
    x0: &DVector<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptimizerTrace<T>> {
    cfg.validate_step()?;
    let c = cfg.step_size;
    drive(f, x0, cfg, |x, g| Ok(Step::Moved(x - g * c, StepNote::Gradient { step: c })))
}

/// Sufficient-decrease constant for the quadratic-fit stencil.
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Gradient descent with a three-point quadratic-fit line search.
///
/// Along `d = −∇f` the stencil samples `f` at `0, s, 2s`. `s` is halved
/// until the `s` sample gives Armijo decrease, then the interpolating
/// parabola's vertex is taken if it is a minimum and beats both samples;
/// otherwise the better sample. `s` carries over between iterations and is
/// doubled when the far sample won.
pub fn gradient_descent_quadratic_fit<T: Real, F: Objective<T> + ?Sized>(
    f: &F,
    x0: &DVector<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptimizerTrace<T>> {
    let mut s = T::one();
    drive(f, x0, cfg, |x, g| {
        let d = -g;
        let slope = g.norm_squared();
        let f0 = f.value(x);
        let at = |a: T| f.value(&(x + &d * a));
        let mut halvings = 0;
        let mut f1 = at(s);
        while !(f1 <= f0 - T::lit(ARMIJO) * s * slope) {
            if halvings == MAX_HALVINGS {
                return Ok(Step::Failed("line search found no decrease".into()));
            }
            s *= T::lit(0.5);
            halvings += 1;
            f1 = at(s);
        }
        let f2 = at(s + s);
        let (mut taken, mut best) = if f2 < f1 { (s + s, f2) } else { (s, f1) };
        let curvature = f0 - T::lit(2.0) * f1 + f2;
        let mut vertex = false;
        if curvature > T::zero() {
            let a = s * (T::lit(3.0) * f0 - T::lit(4.0) * f1 + f2) / (T::lit(2.0) * curvature);
            if a > T::zero() && a.is_finite() {
                let fa = at(a);
                if fa < best {
                    taken = a;
                    best = fa;
                    vertex = true;
                }
            }
        }
        debug_assert!(best < f0);
        let note = StepNote::QuadraticFit { trial: s, taken, vertex, halvings };
        if halvings == 0 && taken >= s + s {
            s += s;
        }
        Ok(Step::Moved(x + &d * taken, note))
    })
}

/// Least-squares slope of `log e_{k+1}` against `log e_k`, `e_k = ‖x^k − x*‖`.
///
/// Only the asymptotic tail is used: pairs with `e_k ≤ ORDER_WINDOW_MAX`
/// whose successor sits above the rounding floor `ORDER_FLOOR`.
pub fn estimate_convergence_order<T: Real>(trace: &OptimizerTrace<T>, x_star: &DVector<T>) -> Result<T> {
    if trace.termination != Termination::Converged {
        return Err(Error::InsufficientData("trace did not converge".into()));
    }
    let floor = T::lit(ORDER_FLOOR);
    let dist: Vec<T> = trace.iterates.iter().map(|x| (x - x_star).norm()).collect();
    let above: Vec<T> = dist.iter().copied().filter(|e| *e > floor).collect();
    let distinct = above.windows(2).all(|w| w[0] != w[1]);
    if above.len() < 4 || !distinct {
        return Err(Error::InsufficientData(format!(
            "need 4 distinct distances above {ORDER_FLOOR:e}, found {}",
            above.len()
        )));
    }
    let pairs: Vec<(T, T)> = dist
        .windows(2)
        .filter(|w| w[0] <= T::lit(ORDER_WINDOW_MAX) && w[1] > floor)
        .map(|w| (w[0].ln(), w[1].ln()))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::InsufficientData("fewer than two pairs in the asymptotic window".into()));
    }
    Ok(slope(&pairs))
}

/// Successor distances at or below this are treated as converged.
pub const ORDER_FLOOR: f64 = 1e-13;
/// Pairs starting farther than this from `x*` are pre-asymptotic.
pub const ORDER_WINDOW_MAX: f64 = 0.3;

fn slope<T: Real>(pts: &[(T, T)]) -> T {
    let n = T::from_usize(pts.len()).unwrap();
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let sxy = pts.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    let sxx = pts.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    sxy / sxx
}
