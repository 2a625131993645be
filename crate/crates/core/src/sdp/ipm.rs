use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::standard::{assemble_standard_form, StandardForm, SymEntries};
use super::{SdpProblem, SdpSolution, SdpStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

const STEP_FRACTION: f64 = 0.98;
const MU_SAFEGUARD: f64 = 1.01;
/// Multiple of the data norm used for the initial `X = S = ξI`. Starting
/// well outside the solution's scale lets `μ` decrease monotonically
/// where a tight start would need it to grow first.
const START_SCALE: f64 = 10.0;
const REFINEMENT_STEPS: usize = 4;
/// Refinement stops once the linearized residuals fall below this fraction
/// of the internal feasibility target.
const REFINEMENT_TARGET: f64 = 1e-3;
/// Iterations continue until the tolerances are met this many times over;
/// a run that stalls in between still reports `Optimal` when its best
/// iterate meets the nominal tolerances.
const AIM: f64 = 1e-2;
/// A run whose primal residual shrinks by less than `STALL_RATIO` over
/// `STALL_WINDOW` iterations while still above `√feas_tol` stops early.
/// On these cubic programs that is the usual sign of an infeasible instance.
const STALL_WINDOW: usize = 8;
const STALL_RATIO: f64 = 0.9;

fn sym<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

fn min_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    let e = sym(m).symmetric_eigenvalues();
    e.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b))
}

/// `A·Y` for a sparse symmetric `A` and dense `Y`.
fn sparse_times<T: Real>(entries: &SymEntries<T>, y: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(y.nrows(), y.ncols());
    for &(r, c, a) in entries {
        for j in 0..y.ncols() {
            out[(r, j)] += a * y[(c, j)];
            if r != c {
                out[(c, j)] += a * y[(r, j)];
            }
        }
    }
    out
}

/// `⟨A, Y⟩` for a sparse symmetric `A`.
fn sparse_inner<T: Real>(entries: &SymEntries<T>, y: &DMatrix<T>) -> T {
    entries.iter().fold(T::zero(), |acc, &(r, c, a)| {
        if r == c {
            acc + a * y[(r, r)]
        } else {
            acc + a * (y[(r, c)] + y[(c, r)])
        }
    })
}

/// Largest `α` with `X + α dX ⪰ 0`, or infinity.
fn max_step<T: Real>(x: &DMatrix<T>, dx: &DMatrix<T>) -> Option<T> {
    let l = Cholesky::new(x.clone())?.l();
    let y = l.solve_lower_triangular(dx)?;
    let w = l.solve_lower_triangular(&y.transpose())?;
    let lam = min_eigenvalue(&w);
    Some(if lam < T::zero() { -T::one() / lam } else { T::max_value().unwrap() })
}

/// Cholesky with a growing diagonal shift when the matrix is numerically
/// indefinite.
fn regularized_cholesky<T: Real>(m: &DMatrix<T>) -> Option<Cholesky<T, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().iter().fold(T::one(), |a, &b| a.max(b.abs()));
    let mut delta = T::lit(1e-14) * scale;
    while delta <= T::lit(1e-6) * scale {
        let shifted = m + DMatrix::identity(m.nrows(), m.ncols()) * delta;
        if let Some(c) = Cholesky::new(shifted) {
            return Some(c);
        }
        delta *= T::lit(100.0);
    }
    None
}

struct Ops<'a, T: Real> {
    sf: &'a StandardForm<T>,
    f: DMatrix<T>,
}

impl<'a, T: Real> Ops<'a, T> {
    fn new(sf: &'a StandardForm<T>) -> Self {
        let mut f = DMatrix::zeros(sf.rows.len(), sf.free_dim);
        for (i, row) in sf.rows.iter().enumerate() {
            for &(j, c) in &row.free {
                f[(i, j)] += c;
            }
        }
        Self { sf, f }
    }

    fn apply(&self, x: &[DMatrix<T>]) -> DVector<T> {
        DVector::from_iterator(
            self.sf.rows.len(),
            self.sf
                .rows
                .iter()
                .map(|row| row.blocks.iter().zip(x).fold(T::zero(), |acc, (e, xb)| acc + sparse_inner(e, xb))),
        )
    }

    fn adjoint(&self, lam: &DVector<T>) -> Vec<DMatrix<T>> {
        let mut out: Vec<DMatrix<T>> = self.sf.block_sizes.iter().map(|&k| DMatrix::zeros(k, k)).collect();
        for (row, &l) in self.sf.rows.iter().zip(lam.iter()) {
            for (e, m) in row.blocks.iter().zip(out.iter_mut()) {
                for &(r, c, a) in e {
                    m[(r, c)] += l * a;
                    if r != c {
                        m[(c, r)] += l * a;
                    }
                }
            }
        }
        out
    }

    /// `M_ij = Σ_b tr(A_ib X_b A_jb S_b⁻¹)`.
    fn schur(&self, x: &[DMatrix<T>], sinv: &[DMatrix<T>]) -> DMatrix<T> {
        let m = self.sf.rows.len();
        let mut out = DMatrix::zeros(m, m);
        for b in 0..x.len() {
            let touching: Vec<usize> = (0..m).filter(|&i| !self.sf.rows[i].blocks[b].is_empty()).collect();
            for &j in &touching {
                // X A_j S⁻¹ = (A_j X)ᵀ S⁻¹.
                let ax = sparse_times(&self.sf.rows[j].blocks[b], &x[b]);
                let prod = ax.transpose() * &sinv[b];
                for &i in &touching {
                    out[(i, j)] += sparse_inner(&self.sf.rows[i].blocks[b], &prod);
                }
            }
        }
        sym(&out)
    }
}

struct Iterate<T: Real> {
    u: DVector<T>,
    lam: DVector<T>,
    x: Vec<DMatrix<T>>,
    s: Vec<DMatrix<T>>,
}

#[derive(Clone)]
struct Measures<T: Real> {
    rp: DVector<T>,
    rf: DVector<T>,
    rd: Vec<DMatrix<T>>,
    pres: T,
    dres: T,
    pobj: T,
    dobj: T,
    rel_gap: T,
    mu: T,
}

impl<T: Real> Measures<T> {
    /// Worst tolerance ratio; `≤ 1` means converged.
    fn merit(&self, cfg: &SolverConfig<T>) -> T {
        (self.pres / cfg.feas_tol).max(self.dres / cfg.feas_tol).max(self.rel_gap / cfg.gap_tol)
    }
}

fn measure<T: Real>(ops: &Ops<'_, T>, it: &Iterate<T>, cscale: T, dim: T) -> Measures<T> {
    let sf = ops.sf;
    let rp = &sf.rhs - &ops.f * &it.u - ops.apply(&it.x);
    let rf = &sf.c_free - ops.f.transpose() * &it.lam;
    let aty = ops.adjoint(&it.lam);
    let rd: Vec<_> = sf.c_blocks.iter().zip(&aty).zip(&it.s).map(|((c, a), s)| c - a - s).collect();
    let pres = rp.amax();
    let dres = rd.iter().fold(rf.amax(), |a, m| a.max(m.amax())) / cscale;
    let pobj = sf.c_free.dot(&it.u) + sf.c_blocks.iter().zip(&it.x).fold(T::zero(), |a, (c, x)| a + c.dot(x));
    let dobj = sf.rhs.dot(&it.lam);
    let xs = it.x.iter().zip(&it.s).fold(T::zero(), |a, (x, s)| a + x.dot(s));
    let rel_gap = xs / (T::one() + pobj.abs() + dobj.abs());
    Measures { rp, rf, rd, pres, dres, pobj, dobj, rel_gap, mu: xs / dim }
}

/// Factorization of the reduced Newton system
/// `[[M, F], [Fᵀ, 0]] (dλ, du) = (r₁, r₂)`.
///
/// `M` alone is singular whenever some equality touches only free
/// variables, so the block system is solved through
/// `M̃ = M + ρ F Fᵀ`, which is positive definite as soon as the stacked
/// constraint operator has full row rank and leaves the solution unchanged.
struct NewtonSystem<T: Real> {
    chol_m: Cholesky<T, Dyn>,
    chol_s: Option<Cholesky<T, Dyn>>,
    y: DMatrix<T>,
    rho: T,
}

impl<T: Real> NewtonSystem<T> {
    fn factor(m: &DMatrix<T>, f: &DMatrix<T>) -> Option<Self> {
        let rho = m.diagonal().iter().fold(T::one(), |a, &b| a.max(b.abs()));
        let mt = m + f * f.transpose() * rho;
        let chol_m = regularized_cholesky(&sym(&mt))?;
        if f.ncols() == 0 {
            return Some(Self { chol_m, chol_s: None, y: DMatrix::zeros(m.nrows(), 0), rho });
        }
        let y = chol_m.solve(f);
        let chol_s = regularized_cholesky(&sym(&(f.transpose() * &y)))?;
        Some(Self { chol_m, chol_s: Some(chol_s), y, rho })
    }

    fn solve(&self, f: &DMatrix<T>, r1: &DVector<T>, r2: &DVector<T>) -> (DVector<T>, DVector<T>) {
        let Some(chol_s) = &self.chol_s else {
            return (self.chol_m.solve(r1), DVector::zeros(0));
        };
        let z = self.chol_m.solve(&(r1 + f * r2 * self.rho));
        let du = chol_s.solve(&(f.transpose() * &z - r2));
        let dlam = z - &self.y * &du;
        (dlam, du)
    }
}

struct Direction<T: Real> {
    du: DVector<T>,
    dlam: DVector<T>,
    dx: Vec<DMatrix<T>>,
    ds: Vec<DMatrix<T>>,
}

/// HKM direction for a complementarity target whose symmetrized
/// `sym(R_c S⁻¹)` is `k`.
///
/// `dX` is formed as `k − sym(X dS S⁻¹)`, which late in the run loses far
/// more digits than the reduced solve itself. The direction is therefore
/// refined against the true linearized residuals `r_p − F du − 𝒜(dX)` and
/// `r_f − Fᵀ dλ`, reusing the factorization.
fn direction<T: Real>(
    ops: &Ops<'_, T>,
    sys: &NewtonSystem<T>,
    it: &Iterate<T>,
    sinv: &[DMatrix<T>],
    meas: &Measures<T>,
    k: &[DMatrix<T>],
    target: T,
) -> Direction<T> {
    let nb = it.x.len();
    let recover = |dlam: &DVector<T>| {
        let aty = ops.adjoint(dlam);
        let ds: Vec<_> = meas.rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
        let dx: Vec<_> = (0..nb).map(|b| &k[b] - sym(&(&it.x[b] * &ds[b] * &sinv[b]))).collect();
        (dx, ds)
    };
    let base: Vec<_> = (0..nb).map(|b| &k[b] - sym(&(&it.x[b] * &meas.rd[b] * &sinv[b]))).collect();
    let r1 = &meas.rp - ops.apply(&base);
    let (mut dlam, mut du) = sys.solve(&ops.f, &r1, &meas.rf);
    let (mut dx, mut ds) = recover(&dlam);
    for _ in 0..REFINEMENT_STEPS {
        let e1 = &meas.rp - &ops.f * &du - ops.apply(&dx);
        let e2 = &meas.rf - ops.f.transpose() * &dlam;
        if e1.amax().max(e2.amax()) <= target {
            break;
        }
        let (wl, wu) = sys.solve(&ops.f, &e1, &e2);
        dlam += wl;
        du += wu;
        (dx, ds) = recover(&dlam);
    }
    Direction { du, dlam, dx, ds }
}

fn step_lengths<T: Real>(it: &Iterate<T>, d: &Direction<T>) -> Option<(T, T)> {
    let mut ap = T::max_value().unwrap();
    let mut ad = ap;
    for b in 0..it.x.len() {
        ap = ap.min(max_step(&it.x[b], &d.dx[b])?);
        ad = ad.min(max_step(&it.s[b], &d.ds[b])?);
    }
    Some((ap, ad))
}

fn complementarity<T: Real>(it: &Iterate<T>, d: &Direction<T>, ap: T, ad: T, dim: T) -> T {
    (0..it.x.len()).fold(T::zero(), |acc, b| {
        acc + (&it.x[b] + &d.dx[b] * ap).dot(&(&it.s[b] + &d.ds[b] * ad))
    }) / dim
}

fn data_norm<T: Real>(sf: &StandardForm<T>) -> T {
    let mut n = sf.rhs.amax().max(sf.c_free.amax());
    for c in &sf.c_blocks {
        n = n.max(c.amax());
    }
    for row in &sf.rows {
        for &(_, c) in &row.free {
            n = n.max(c.abs());
        }
        for e in &row.blocks {
            for &(_, _, a) in e {
                n = n.max(a.abs());
            }
        }
    }
    n
}

fn finish<T: Real>(status: SdpStatus, it: Iterate<T>, meas: &Measures<T>, iterations: usize, mu_history: Vec<T>) -> SdpSolution<T> {
    let min_eig = it.x.iter().fold(T::max_value().unwrap(), |a, x| a.min(min_eigenvalue(x)));
    SdpSolution {
        status,
        free: it.u,
        blocks: it.x,
        dual: it.lam,
        slacks: it.s,
        objective_value: meas.pobj,
        dual_objective: meas.dobj,
        dual_residual: meas.dres,
        max_eq_residual: meas.pres,
        min_block_eigenvalue: min_eig,
        gap: meas.rel_gap,
        iterations,
        mu_history,
    }
}

/// Solves `p` with an infeasible-start primal-dual interior-point method.
///
/// Returns `Err` only for malformed problems. Solver trouble is reported
/// through [`SdpSolution::status`], together with the best iterate seen.
pub fn solve<T: Real>(p: &SdpProblem<T>, cfg: &SolverConfig<T>) -> Result<SdpSolution<T>> {
    if cfg.max_iters == 0 {
        return Err(Error::InvalidProblem("max_iters must be at least 1".into()));
    }
    if p.blocks.is_empty() {
        return Err(Error::InvalidProblem("at least one PSD block is required".into()));
    }
    let sf = assemble_standard_form(p)?;
    let ops = Ops::new(&sf);
    let dim = T::from_usize(sf.block_sizes.iter().sum()).unwrap();
    let cscale = T::one() + sf.c_blocks.iter().fold(sf.c_free.amax(), |a, c| a.max(c.amax()));
    let xi = T::one().max(data_norm(&sf)) * T::lit(START_SCALE);
    let eye = |k: usize| DMatrix::identity(k, k) * xi;

    let mut it = Iterate {
        u: DVector::zeros(sf.free_dim),
        lam: DVector::zeros(sf.rows.len()),
        x: sf.block_sizes.iter().map(|&k| eye(k)).collect(),
        s: sf.block_sizes.iter().map(|&k| eye(k)).collect(),
    };
    let mut meas = measure(&ops, &it, cscale, dim);
    let mut mu_history = vec![meas.mu];
    let mut pres_history = vec![meas.pres];
    let mut best: Option<(Iterate<T>, Measures<T>)> = None;
    let fraction = T::lit(STEP_FRACTION);
    let aim = T::lit(AIM);
    let target = cfg.feas_tol * aim * T::lit(REFINEMENT_TARGET);
    let failure = |status: SdpStatus, best: Option<(Iterate<T>, Measures<T>)>, mu_history: Vec<T>| {
        let (it, meas) = best.expect("initial iterate is always recorded");
        let status = if meas.merit(cfg) <= T::one() { SdpStatus::Optimal } else { status };
        let iterations = mu_history.len() - 1;
        finish(status, it, &meas, iterations, mu_history)
    };

    for iter in 0..=cfg.max_iters {
        if meas.merit(cfg) <= aim {
            return Ok(finish(SdpStatus::Optimal, it, &meas, iter, mu_history));
        }
        if best.as_ref().map_or(true, |(_, m)| meas.merit(cfg) < m.merit(cfg)) {
            let snapshot = Iterate { u: it.u.clone(), lam: it.lam.clone(), x: it.x.clone(), s: it.s.clone() };
            best = Some((snapshot, meas.clone()));
        }
        if iter == cfg.max_iters {
            break;
        }
        if iter >= 2 * STALL_WINDOW
            && meas.pres > cfg.feas_tol.sqrt()
            && meas.pres > T::lit(STALL_RATIO) * pres_history[iter - STALL_WINDOW]
        {
            return Ok(failure(SdpStatus::NumericalFailure, best, mu_history));
        }

        let Some(sinv) = it.s.iter().map(|s| Cholesky::new(s.clone()).map(|c| sym(&c.inverse()))).collect::<Option<Vec<_>>>()
        else {
            return Ok(failure(SdpStatus::NumericalFailure, best, mu_history));
        };
        let schur = ops.schur(&it.x, &sinv);
        let Some(sys) = NewtonSystem::factor(&schur, &ops.f) else {
            return Ok(failure(SdpStatus::NumericalFailure, best, mu_history));
        };

        // Predictor.
        let k_aff: Vec<_> = it.x.iter().map(|x| -x).collect();
        let aff = direction(&ops, &sys, &it, &sinv, &meas, &k_aff, target);
        let Some((ap, ad)) = step_lengths(&it, &aff) else {
            return Ok(failure(SdpStatus::NumericalFailure, best, mu_history));
        };
        let (ap, ad) = (T::one().min(ap), T::one().min(ad));
        let mu_aff = complementarity(&it, &aff, ap, ad, dim);
        let ratio = (mu_aff / meas.mu).max(T::zero()).min(T::one());
        let sigma = ratio * ratio * ratio;

        // Corrector.
        let k_cor: Vec<_> = (0..it.x.len())
            .map(|b| &sinv[b] * (sigma * meas.mu) - &it.x[b] - sym(&(&aff.dx[b] * &aff.ds[b] * &sinv[b])))
            .collect();
        let d = direction(&ops, &sys, &it, &sinv, &meas, &k_cor, target);
        let Some((ap, ad)) = step_lengths(&it, &d) else {
            return Ok(failure(SdpStatus::NumericalFailure, best, mu_history));
        };
        let mut ap = T::one().min(fraction * ap);
        let mut ad = T::one().min(fraction * ad);
        let cap = meas.mu * T::lit(MU_SAFEGUARD);
        let mut tries = 0;
        while complementarity(&it, &d, ap, ad, dim) > cap {
            ap *= T::lit(0.8);
            ad *= T::lit(0.8);
            tries += 1;
            if tries == 60 {
                break;
            }
        }
        if tries == 60 || ap.max(ad) < T::lit(1e-12) {
            return Ok(failure(SdpStatus::NumericalFailure, best, mu_history));
        }

        it.u += &d.du * ap;
        it.lam += &d.dlam * ad;
        for b in 0..it.x.len() {
            it.x[b] = sym(&(&it.x[b] + &d.dx[b] * ap));
            it.s[b] = sym(&(&it.s[b] + &d.ds[b] * ad));
        }
        meas = measure(&ops, &it, cscale, dim);
        mu_history.push(meas.mu);
        pres_history.push(meas.pres);
        if !meas.merit(cfg).is_finite() {
            return Ok(failure(SdpStatus::NumericalFailure, best, mu_history));
        }
    }
    Ok(failure(SdpStatus::MaxIterations, best, mu_history))
}
