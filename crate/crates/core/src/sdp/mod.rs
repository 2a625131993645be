//! A small dense primal-dual interior-point solver for semidefinite programs.
//!
//! Problems are posed over free scalar variables `u` and symmetric matrix
//! variables `X₁..X_B`, each constrained to be positive semidefinite:
//!
//! ```text
//! minimize    ⟨c, u⟩ + Σ_b ⟨C_b, X_b⟩
//! subject to  ⟨f_i, u⟩ + Σ_b ⟨A_ib, X_b⟩ = r_i     i = 1..m
//!             X_b ⪰ 0
//! ```
//!
//! Linear functionals address matrix entries through the upper triangle. A
//! coefficient on an off-diagonal entry `(r, c)` multiplies the single value
//! `X_rc = X_cr`, i.e. it accounts for both mirror entries at once.
//!
//! The method is an infeasible-start path-following scheme with the
//! HKM (`X·dS·S⁻¹`) symmetrized direction and Mehrotra predictor-corrector
//! steps. Everything is dense; the solver is meant for the small blocks
//! that arise from cubic subproblems.

mod ipm;
mod standard;

pub use ipm::solve;
pub use standard::{assemble_standard_form, smat, svec, svec_len, StandardForm};

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};

/// A coefficient on one upper-triangle entry of a matrix variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEntry<T> {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub coeff: T,
}

/// Sparse linear functional over free variables and block entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional<T> {
    pub free: Vec<(usize, T)>,
    pub entries: Vec<BlockEntry<T>>,
}

impl<T: Real> Default for LinearFunctional<T> {
    fn default() -> Self {
        Self { free: Vec::new(), entries: Vec::new() }
    }
}

impl<T: Real> LinearFunctional<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_free(&mut self, index: usize, coeff: T) -> &mut Self {
        if coeff != T::zero() {
            self.free.push((index, coeff));
        }
        self
    }

    /// Adds `coeff · X_rc` for block `block`; `(row, col)` may be given in
    /// either order.
    pub fn add_entry(&mut self, block: usize, row: usize, col: usize, coeff: T) -> &mut Self {
        if coeff != T::zero() {
            let (row, col) = if row <= col { (row, col) } else { (col, row) };
            self.entries.push(BlockEntry { block, row, col, coeff });
        }
        self
    }

    /// Evaluates the functional at an assignment.
    pub fn eval(&self, free: &DVector<T>, blocks: &[DMatrix<T>]) -> T {
        let f = self.free.iter().fold(T::zero(), |acc, &(i, c)| acc + c * free[i]);
        self.entries.iter().fold(f, |acc, e| acc + e.coeff * blocks[e.block][(e.row, e.col)])
    }
}

/// `⟨lhs, (u, X)⟩ = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqConstraint<T> {
    pub lhs: LinearFunctional<T>,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem<T> {
    pub free_dim: usize,
    pub blocks: Vec<usize>,
    pub objective: LinearFunctional<T>,
    pub eq_constraints: Vec<EqConstraint<T>>,
}

impl<T: Real> SdpProblem<T> {
    pub fn new(free_dim: usize, blocks: Vec<usize>) -> Self {
        Self { free_dim, blocks, objective: LinearFunctional::new(), eq_constraints: Vec::new() }
    }

    pub fn add_constraint(&mut self, lhs: LinearFunctional<T>, rhs: T) {
        self.eq_constraints.push(EqConstraint { lhs, rhs });
    }

    /// Checks that every functional only references declared variables.
    pub fn validate(&self) -> Result<()> {
        if self.blocks.iter().any(|&k| k == 0) {
            return Err(Error::InvalidProblem("empty PSD block".into()));
        }
        let check = |f: &LinearFunctional<T>, what: &str| -> Result<()> {
            for &(i, c) in &f.free {
                if i >= self.free_dim {
                    return Err(Error::InvalidProblem(format!("{what}: free variable {i} out of range")));
                }
                if !c.is_finite() {
                    return Err(Error::NonFinite { what: "SDP coefficient" });
                }
            }
            for e in &f.entries {
                let Some(&k) = self.blocks.get(e.block) else {
                    return Err(Error::InvalidProblem(format!("{what}: block {} out of range", e.block)));
                };
                if e.row > e.col || e.col >= k {
                    return Err(Error::InvalidProblem(format!(
                        "{what}: entry ({}, {}) invalid for block {} of size {k}",
                        e.row, e.col, e.block
                    )));
                }
                if !e.coeff.is_finite() {
                    return Err(Error::NonFinite { what: "SDP coefficient" });
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, c) in self.eq_constraints.iter().enumerate() {
            check(&c.lhs, &format!("constraint {i}"))?;
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite { what: "SDP right-hand side" });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    pub feas_tol: T,
    pub gap_tol: T,
    pub max_iters: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self { feas_tol: T::tolerance(1e-8), gap_tol: T::tolerance(1e-8), max_iters: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution<T: Real> {
    pub status: SdpStatus,
    pub free: DVector<T>,
    pub blocks: Vec<DMatrix<T>>,
    /// Equality multipliers.
    pub dual: DVector<T>,
    /// Dual slack matrices, one per block.
    pub slacks: Vec<DMatrix<T>>,
    pub objective_value: T,
    /// `rᵀλ`; a lower bound on the optimum when the dual residual is small.
    pub dual_objective: T,
    /// Largest dual equality violation, relative to `1 + max |c|`.
    pub dual_residual: T,
    /// Infinity norm of the equality violations.
    pub max_eq_residual: T,
    /// Most negative eigenvalue across the block variables.
    pub min_block_eigenvalue: T,
    /// Relative duality gap `Σ⟨X,S⟩ / (1 + |primal| + |dual|)` at the returned iterate.
    pub gap: T,
    pub iterations: usize,
    /// Complementarity `Σ⟨X,S⟩ / Σ k_b` after each accepted iteration,
    /// starting with the initial point.
    pub mu_history: Vec<T>,
}
