//! Local minima of cubic models through a semidefinite relaxation.
//!
//! For `p(x) = 1/6 Σ xᵢ xᵀHᵢx + 1/2 xᵀQx + bᵀx + c` the solver minimizes
//!
//! ```text
//! φ = 1/2 Tr(QX) + bᵀx + y/2
//! s.t. 1/2 Tr(HᵢX) + (Qx)ᵢ + bᵢ = 0                       i = 1..n
//!      [ Σ xᵢHᵢ + Q          Σ Tr(HᵢX) eᵢ + Qx ]
//!      [ (Σ Tr(HᵢX) eᵢ + Qx)ᵀ          y       ]  ⪰ 0
//!      [ X   x ]
//!      [ xᵀ  1 ]  ⪰ 0
//! ```
//!
//! `φ ≥ 0` on the feasible set, with `φ = 0` exactly when `p` has a
//! second-order point; the `x` part of an optimal solution is then such a
//! point.
//!
//! When no second-order point exists the program above is frequently
//! infeasible rather than positive-valued, so a bare threshold on `φ`
//! cannot report it. If the main solve does not converge, a phase-one
//! program measures the least violation `t` of stationarity and Hessian
//! semidefiniteness over the same lifted variables; `t > phi_tol` proves
//! there is no second-order point.

use std::io;

use nalgebra::{DMatrix, DVector};

use crate::cubic::CubicModel;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sdp::{self, assemble_standard_form, LinearFunctional, SdpProblem, SdpStatus, SolverConfig};

/// Block index of `W`, the first PSD block.
const W: usize = 0;
/// Block index of `Z = [[X, x], [xᵀ, 1]]`.
const Z: usize = 1;
const POLISH_STEPS: usize = 3;
const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;
/// A scaled solution this far from the origin triggers one re-solve at
/// the scale of the point found.
const RESCALE_AT: f64 = 4.0;
/// Phase-one bounds in normalized coordinates: `Tr(X) ≤ n·R`, `y ≤ Y`.
const PHASE_ONE_TRACE_BOUND: f64 = 100.0;
const PHASE_ONE_CORNER_BOUND: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMinConfig<T> {
    pub phi_tol: T,
    pub grad_tol: T,
    pub psd_tol: T,
    pub psd_strict_tol: T,
    /// Refine the extracted point with up to three Newton steps on `∇p = 0`.
    pub polish: bool,
    pub solver: SolverConfig<T>,
}

impl<T: Real> Default for LocalMinConfig<T> {
    fn default() -> Self {
        Self {
            phi_tol: T::tolerance(1e-6),
            grad_tol: T::tolerance(1e-6),
            psd_tol: T::tolerance(1e-7),
            psd_strict_tol: T::tolerance(1e-7),
            polish: true,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T: Real> {
    /// Strict local minimum, in model coordinates.
    LocalMin(DVector<T>),
    /// A point returned by the relaxation that is not certified as a strict
    /// local minimum (singular or slightly indefinite Hessian, or gradient
    /// above tolerance).
    SecondOrderPoint(DVector<T>),
    NoSecondOrderPoint,
    SolverFailed,
}

impl<T: Real> Outcome<T> {
    pub fn point(&self) -> Option<&DVector<T>> {
        match self {
            Outcome::LocalMin(x) | Outcome::SecondOrderPoint(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::LocalMin(_) => "local-min",
            Outcome::SecondOrderPoint(_) => "second-order-point",
            Outcome::NoSecondOrderPoint => "no-second-order-point",
            Outcome::SolverFailed => "solver-failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMinResult<T: Real> {
    pub outcome: Outcome<T>,
    /// Optimal `φ`; `+∞` when the phase-one program proved infeasibility.
    pub phi_value: T,
    pub shift_used: T,
    pub grad_norm_at_point: Option<T>,
    pub hess_min_eig_at_point: Option<T>,
    /// Interior-point iterations across every SDP solved for this result.
    pub sdp_iterations: usize,
    /// `x` part of the relaxation's minimizer, in model coordinates, whenever
    /// the main program solved. Present even when `φ > phi_tol`, in which
    /// case it is not a stationary point.
    pub relaxation_point: Option<DVector<T>>,
}

/// Variable layout shared by the main and phase-one programs.
struct Layout {
    n: usize,
}

impl Layout {
    fn x(&self, i: usize) -> usize {
        i
    }

    /// Second free variable after `x`: `y` in the main program, `t` in phase one.
    fn extra(&self) -> usize {
        self.n
    }

    /// Adds `coeff · Tr(M X)` over the `X` part of `Z`, symmetric `M`.
    fn add_trace<T: Real>(&self, f: &mut LinearFunctional<T>, m: &DMatrix<T>, coeff: T) {
        for p in 0..self.n {
            f.add_entry(Z, p, p, coeff * m[(p, p)]);
            for q in (p + 1)..self.n {
                f.add_entry(Z, p, q, coeff * T::lit(2.0) * m[(p, q)]);
            }
        }
    }

    /// `½ Tr(HᵢX) + (Qx)ᵢ`, without the constant `bᵢ`.
    fn stationarity<T: Real>(&self, m: &CubicModel<T>, i: usize) -> LinearFunctional<T> {
        let mut f = LinearFunctional::new();
        self.add_trace(&mut f, &m.tensor()[i], T::lit(0.5));
        for j in 0..self.n {
            f.add_free(self.x(j), m.quadratic_part()[(i, j)]);
        }
        f
    }

    /// Equalities pinning `Z`'s last column to `(x, 1)`.
    fn tie_z<T: Real>(&self, p: &mut SdpProblem<T>) {
        for j in 0..self.n {
            let mut f = LinearFunctional::new();
            f.add_entry(Z, j, self.n, T::one()).add_free(self.x(j), -T::one());
            p.add_constraint(f, T::zero());
        }
        let mut f = LinearFunctional::new();
        f.add_entry(Z, self.n, self.n, T::one());
        p.add_constraint(f, T::one());
    }

    /// Equalities `W_jn = Tr(H_j X) + (Qx)_j`.
    fn tie_last_column<T: Real>(&self, p: &mut SdpProblem<T>, m: &CubicModel<T>) {
        let n = self.n;
        for j in 0..n {
            let mut f = LinearFunctional::new();
            f.add_entry(W, j, n, T::one());
            self.add_trace(&mut f, &m.tensor()[j], -T::one());
            for i in 0..n {
                f.add_free(self.x(i), -m.quadratic_part()[(j, i)]);
            }
            p.add_constraint(f, T::zero());
        }
    }

    /// Equalities `W_jk − (Σ xᵢHᵢ)_jk − t·δ_jk = Q_jk` for `j ≤ k < n`.
    fn tie_hessian_block<T: Real>(&self, p: &mut SdpProblem<T>, m: &CubicModel<T>, block: usize, with_t: bool) {
        let n = self.n;
        for j in 0..n {
            for k in j..n {
                let mut f = LinearFunctional::new();
                f.add_entry(block, j, k, T::one());
                for i in 0..n {
                    f.add_free(self.x(i), -m.tensor()[i][(j, k)]);
                }
                if with_t && j == k {
                    f.add_free(self.extra(), -T::one());
                }
                p.add_constraint(f, m.quadratic_part()[(j, k)]);
            }
        }
    }
}

/// Assembles the relaxation for `m`.
///
/// Free variables are `(x₁..xₙ, y)`; blocks are `W` and `Z`, each of size
/// `n + 1`. Besides the `n` stationarity equalities, `W` is tied entry-wise
/// to its affine expression, `Z`'s last column is tied to `x` and its corner
/// pinned to `1`.
pub fn build_sdp<T: Real>(m: &CubicModel<T>) -> SdpProblem<T> {
    let n = m.dim();
    let lay = Layout { n };
    let mut p = SdpProblem::new(n + 1, vec![n + 1, n + 1]);

    lay.add_trace(&mut p.objective, m.quadratic_part(), T::lit(0.5));
    for i in 0..n {
        p.objective.add_free(lay.x(i), m.linear_part()[i]);
    }
    p.objective.add_free(lay.extra(), T::lit(0.5));

    for i in 0..n {
        p.add_constraint(lay.stationarity(m, i), -m.linear_part()[i]);
    }
    lay.tie_hessian_block(&mut p, m, W, false);
    lay.tie_last_column(&mut p, m);
    let mut f = LinearFunctional::new();
    f.add_entry(W, n, n, T::one()).add_free(lay.extra(), -T::one());
    p.add_constraint(f, T::zero());
    lay.tie_z(&mut p);
    p
}

/// Phase-one program: minimize `t` subject to `‖r‖ ≤ t` for the
/// stationarity residual `r`, `W + t·diag(I, 0) ⪰ 0` with `W` the main
/// program's first block, `Z ⪰ 0`, `Tr(X) ≤ R` and `y ≤ Y`.
///
/// Without the bounds the infimum is `0` whenever the main program is only
/// asymptotically feasible, which it is for many cubics without a
/// second-order point. Bounded, `t > 0` certifies that no second-order
/// point of the (normalized) model lies in the region, and both the
/// program and its dual are strictly feasible.
///
/// Free variables are `(x, t, y)`; blocks are `W`, `Z`,
/// `R = [[tI, r], [rᵀ, t]]` and the two bound slacks.
fn build_phase_one<T: Real>(m: &CubicModel<T>) -> SdpProblem<T> {
    const R: usize = 2;
    const TRACE_SLACK: usize = 3;
    const Y_SLACK: usize = 4;
    let n = m.dim();
    let lay = Layout { n };
    let t = lay.extra();
    let y = n + 1;
    let mut p = SdpProblem::new(n + 2, vec![n + 1, n + 1, n + 1, 1, 1]);
    let mut f = LinearFunctional::new();
    for i in 0..n {
        f.add_entry(Z, i, i, T::one());
    }
    f.add_entry(TRACE_SLACK, 0, 0, T::one());
    p.add_constraint(f, T::lit(PHASE_ONE_TRACE_BOUND) * T::from_usize(n).unwrap());
    let mut f = LinearFunctional::new();
    f.add_free(y, T::one()).add_entry(Y_SLACK, 0, 0, T::one());
    p.add_constraint(f, T::lit(PHASE_ONE_CORNER_BOUND));
    p.objective.add_free(t, T::one());
    lay.tie_hessian_block(&mut p, m, W, true);
    lay.tie_last_column(&mut p, m);
    let mut f = LinearFunctional::new();
    f.add_entry(W, n, n, T::one()).add_free(y, -T::one());
    p.add_constraint(f, T::zero());
    lay.tie_z(&mut p);
    for j in 0..=n {
        for k in j..=n {
            let mut f = LinearFunctional::new();
            f.add_entry(R, j, k, T::one());
            let mut rhs = T::zero();
            if j == k {
                f.add_free(t, -T::one());
            } else if k == n {
                let r = lay.stationarity(m, j);
                for &(i, c) in &r.free {
                    f.add_free(i, -c);
                }
                for e in &r.entries {
                    f.add_entry(e.block, e.row, e.col, -e.coeff);
                }
                rhs = m.linear_part()[j];
            }
            p.add_constraint(f, rhs);
        }
    }
    p
}

/// Writes the relaxation for `m` as sparse triplets; see
/// [`sdp::StandardForm::write_triplets`].
pub fn write_sdp_triplets<T: Real, W: io::Write>(m: &CubicModel<T>, w: W) -> io::Result<()> {
    let sf = assemble_standard_form(&build_sdp(m)).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    sf.write_triplets(w)
}

/// Length scale at which the cubic, quadratic and linear parts of `m`
/// balance; stationary points typically sit within a few multiples of it.
fn natural_scale<T: Real>(m: &CubicModel<T>) -> T {
    let h = m.tensor().iter().fold(T::zero(), |a, t| a.max(t.amax()));
    let q = m.quadratic_part().amax();
    let g = m.linear_part().amax();
    let tiny = T::lit(1e-300);
    let s = if h > tiny {
        (q / h).max((g / h).sqrt())
    } else if q > tiny {
        g / q
    } else {
        T::one()
    };
    if s > tiny {
        clamp_scale(s)
    } else {
        T::one()
    }
}

fn clamp_scale<T: Real>(s: T) -> T {
    s.max(T::lit(MIN_SCALE)).min(T::lit(MAX_SCALE))
}

/// `p̂(z) = p(s·z) / w` with `w` chosen so the largest coefficient is one.
///
/// The relaxation's solution entries grow like `‖x‖²` and worse, so
/// without this a minimizer at `|x| ≈ 10` already pushes the solver's
/// absolute tolerances below what double precision can deliver.
fn scale_model<T: Real>(m: &CubicModel<T>, s: T) -> CubicModel<T> {
    let h = m.tensor().iter().fold(T::zero(), |a, t| a.max(t.amax()));
    let q = m.quadratic_part().amax();
    let g = m.linear_part().amax();
    let (s2, s3) = (s * s, s * s * s);
    let w = (h * s3).max(q * s2).max(g * s);
    let w = if w > T::lit(1e-300) { w } else { T::one() };
    let tensor = m.tensor().iter().map(|t| t * (s3 / w)).collect();
    CubicModel::new(tensor, m.quadratic_part() * (s2 / w), m.linear_part() * (s / w), m.constant() / w)
        .expect("scaling preserves validity")
}

fn min_eig<T: Real>(m: &DMatrix<T>) -> T {
    m.clone().symmetric_eigen().eigenvalues.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b))
}

/// Up to three Newton steps on `∇p = 0`, each kept only if it lowers `‖∇p‖`.
fn polish<T: Real>(m: &CubicModel<T>, mut x: DVector<T>) -> DVector<T> {
    let mut g = m.gradient_unchecked(&x);
    for _ in 0..POLISH_STEPS {
        let Some(step) = m.hessian_unchecked(&x).lu().solve(&g) else {
            break;
        };
        let cand = &x - step;
        let gc = m.gradient_unchecked(&cand);
        if !(gc.norm() < g.norm()) {
            break;
        }
        x = cand;
        g = gc;
    }
    x
}

fn classify<T: Real>(m: &CubicModel<T>, x: DVector<T>, cfg: &LocalMinConfig<T>) -> (Outcome<T>, T, T) {
    let x = if cfg.polish { polish(m, x) } else { x };
    let g = m.gradient_unchecked(&x).norm();
    let e = min_eig(&m.hessian_unchecked(&x));
    let outcome = if g <= cfg.grad_tol && e >= cfg.psd_strict_tol {
        Outcome::LocalMin(x)
    } else {
        Outcome::SecondOrderPoint(x)
    };
    (outcome, g, e)
}

/// Solves the relaxation for `m` and classifies the result.
///
/// The programs are solved for a rescaled copy `p(s·z) / w` of `m`, so
/// `phi_value` is `φ` of that normalized model; the returned point is in
/// `m`'s own coordinates.
pub fn find_local_min<T: Real>(m: &CubicModel<T>, cfg: &LocalMinConfig<T>) -> Result<LocalMinResult<T>> {
    let n = m.dim();
    let mut s = natural_scale(m);
    let mut sol = sdp::solve(&build_sdp(&scale_model(m, s)), &cfg.solver)?;
    let mut iterations = sol.iterations;
    let reach = sol.free.rows(0, n).amax();
    if reach.is_finite() && reach > T::lit(RESCALE_AT) {
        let s2 = clamp_scale(s * reach);
        let retry = sdp::solve(&build_sdp(&scale_model(m, s2)), &cfg.solver)?;
        iterations += retry.iterations;
        if retry.status == SdpStatus::Optimal || sol.status != SdpStatus::Optimal {
            (s, sol) = (s2, retry);
        }
    }
    let mut result = LocalMinResult {
        outcome: Outcome::SolverFailed,
        phi_value: sol.objective_value,
        shift_used: T::zero(),
        grad_norm_at_point: None,
        hess_min_eig_at_point: None,
        sdp_iterations: iterations,
        relaxation_point: None,
    };
    if sol.status == SdpStatus::Optimal {
        let x = sol.free.rows(0, n).into_owned() * s;
        result.relaxation_point = Some(x.clone());
        if sol.objective_value > cfg.phi_tol {
            result.outcome = Outcome::NoSecondOrderPoint;
            return Ok(result);
        }
        let (outcome, g, e) = classify(m, x, cfg);
        result.outcome = outcome;
        result.grad_norm_at_point = Some(g);
        result.hess_min_eig_at_point = Some(e);
        return Ok(result);
    }
    // A dual-feasible iterate bounds φ from below even when the primal side
    // has not converged.
    if sol.dual_residual <= cfg.solver.feas_tol && sol.dual_objective > cfg.phi_tol {
        result.outcome = Outcome::NoSecondOrderPoint;
        result.phi_value = sol.dual_objective;
        return Ok(result);
    }

    let phase_one = sdp::solve(&build_phase_one(&scale_model(m, s)), &cfg.solver)?;
    result.sdp_iterations += phase_one.iterations;
    if phase_one.status == SdpStatus::Optimal && phase_one.free[n] > cfg.phi_tol {
        result.outcome = Outcome::NoSecondOrderPoint;
        result.phi_value = T::from_f64(f64::INFINITY).unwrap_or_else(|| T::max_value().unwrap());
    }
    Ok(result)
}

/// Tries `Q + σI` for each `σ` in `shifts` and returns the first result
/// that yields a point. `shifts` must start with `0`; when every shift
/// fails, the unshifted result is returned.
pub fn find_local_min_with_shift<T: Real>(
    m: &CubicModel<T>,
    shifts: &[T],
    cfg: &LocalMinConfig<T>,
) -> Result<LocalMinResult<T>> {
    match shifts.first() {
        Some(s) if *s == T::zero() => {}
        _ => return Err(Error::InvalidProblem("shift ladder must start with 0".into())),
    }
    check_shifts(shifts)?;
    let unshifted = find_local_min(m, cfg)?;
    continue_shift_ladder(m, unshifted, &shifts[1..], cfg)
}

/// The ladder of [`find_local_min_with_shift`] after the unshifted attempt,
/// for callers that already hold its result.
pub fn continue_shift_ladder<T: Real>(
    m: &CubicModel<T>,
    unshifted: LocalMinResult<T>,
    shifts: &[T],
    cfg: &LocalMinConfig<T>,
) -> Result<LocalMinResult<T>> {
    check_shifts(shifts)?;
    if unshifted.outcome.point().is_some() {
        return Ok(unshifted);
    }
    let mut iterations = unshifted.sdp_iterations;
    for &sigma in shifts {
        let mut r = find_local_min(&m.shifted(sigma), cfg)?;
        iterations += r.sdp_iterations;
        r.shift_used = sigma;
        r.sdp_iterations = iterations;
        if r.outcome.point().is_some() {
            return Ok(r);
        }
    }
    Ok(LocalMinResult { sdp_iterations: iterations, ..unshifted })
}

fn check_shifts<T: Real>(shifts: &[T]) -> Result<()> {
    if shifts.iter().any(|s| !(*s >= T::zero()) || !s.is_finite()) {
        return Err(Error::InvalidProblem("shifts must be finite and non-negative".into()));
    }
    Ok(())
}
