use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use super::{LinearFunctional, SdpProblem};
use crate::error::Result;
use crate::scalar::Real;

/// Number of upper-triangle entries of a `k × k` symmetric matrix.
pub fn svec_len(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Row-major upper triangle with off-diagonals scaled by `√2`, so that
/// `svec(A)·svec(B) = ⟨A, B⟩` for symmetric `A`, `B`.
pub fn svec<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    let k = m.nrows();
    let r2 = T::lit(2.0).sqrt();
    let mut out = DVector::zeros(svec_len(k));
    let mut idx = 0;
    for r in 0..k {
        for c in r..k {
            out[idx] = if r == c { m[(r, c)] } else { m[(r, c)] * r2 };
            idx += 1;
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat<T: Real>(v: &DVector<T>, k: usize) -> DMatrix<T> {
    assert_eq!(v.len(), svec_len(k), "svec length does not match block size");
    let r2 = T::lit(2.0).sqrt();
    let mut out = DMatrix::zeros(k, k);
    let mut idx = 0;
    for r in 0..k {
        for c in r..k {
            let val = if r == c { v[idx] } else { v[idx] / r2 };
            out[(r, c)] = val;
            out[(c, r)] = val;
            idx += 1;
        }
    }
    out
}

/// Entries `(r, c, a)` with `r ≤ c` of a symmetric coefficient matrix `A`,
/// meaning `A_rc = A_cr = a`.
pub(crate) type SymEntries<T> = Vec<(usize, usize, T)>;

/// One equality row: free-variable coefficients and one symmetric
/// coefficient matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Row<T> {
    pub free: Vec<(usize, T)>,
    pub blocks: Vec<SymEntries<T>>,
}

/// Problem in the form
/// `min cᵀu + Σ⟨C_b, X_b⟩  s.t.  F u + 𝒜(X) = r,  X_b ⪰ 0`
/// with every block coefficient stored as a genuine symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm<T: Real> {
    pub free_dim: usize,
    pub block_sizes: Vec<usize>,
    pub c_free: DVector<T>,
    pub c_blocks: Vec<DMatrix<T>>,
    pub rhs: DVector<T>,
    pub(crate) rows: Vec<Row<T>>,
}

fn split<T: Real>(f: &LinearFunctional<T>, nblocks: usize) -> (Vec<(usize, T)>, Vec<SymEntries<T>>) {
    let half = T::lit(0.5);
    let mut blocks = vec![Vec::new(); nblocks];
    for e in &f.entries {
        let a = if e.row == e.col { e.coeff } else { e.coeff * half };
        blocks[e.block].push((e.row, e.col, a));
    }
    (f.free.clone(), blocks)
}

/// Vectorizes a validated problem.
///
/// Block variables are already matrix variables in [`SdpProblem`], so any
/// tying of a block to an affine expression is expressed by the caller
/// through ordinary equality rows; the canonical form keeps exactly the
/// problem's equalities, in order.
pub fn assemble_standard_form<T: Real>(p: &SdpProblem<T>) -> Result<StandardForm<T>> {
    p.validate()?;
    let nb = p.blocks.len();
    let (obj_free, obj_blocks) = split(&p.objective, nb);
    let mut c_free = DVector::zeros(p.free_dim);
    for (i, c) in obj_free {
        c_free[i] += c;
    }
    let c_blocks = p
        .blocks
        .iter()
        .zip(obj_blocks)
        .map(|(&k, entries)| {
            let mut m = DMatrix::zeros(k, k);
            for (r, c, a) in entries {
                m[(r, c)] += a;
                if r != c {
                    m[(c, r)] += a;
                }
            }
            m
        })
        .collect();
    let rows = p
        .eq_constraints
        .iter()
        .map(|e| {
            let (free, blocks) = split(&e.lhs, nb);
            Row { free, blocks }
        })
        .collect();
    let rhs = DVector::from_iterator(p.eq_constraints.len(), p.eq_constraints.iter().map(|e| e.rhs));
    Ok(StandardForm { free_dim: p.free_dim, block_sizes: p.blocks.clone(), c_free, c_blocks, rhs, rows })
}

impl<T: Real> StandardForm<T> {
    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    /// Length of the stacked vector `(u, svec(X₁), …)`.
    pub fn vector_len(&self) -> usize {
        self.free_dim + self.block_sizes.iter().map(|&k| svec_len(k)).sum::<usize>()
    }

    pub fn vectorize(&self, free: &DVector<T>, blocks: &[DMatrix<T>]) -> DVector<T> {
        let mut out = Vec::with_capacity(self.vector_len());
        out.extend(free.iter().copied());
        for b in blocks {
            out.extend(svec(b).iter().copied());
        }
        DVector::from_vec(out)
    }

    pub fn devectorize(&self, v: &DVector<T>) -> (DVector<T>, Vec<DMatrix<T>>) {
        let free = v.rows(0, self.free_dim).into_owned();
        let mut offset = self.free_dim;
        let blocks = self
            .block_sizes
            .iter()
            .map(|&k| {
                let len = svec_len(k);
                let m = smat(&v.rows(offset, len).into_owned(), k);
                offset += len;
                m
            })
            .collect();
        (free, blocks)
    }

    fn sym_matrix(k: usize, entries: &SymEntries<T>) -> DMatrix<T> {
        let mut m = DMatrix::zeros(k, k);
        for &(r, c, a) in entries {
            m[(r, c)] += a;
            if r != c {
                m[(c, r)] += a;
            }
        }
        m
    }

    /// Stacked coefficient vector of the objective.
    pub fn objective_vector(&self) -> DVector<T> {
        self.vectorize(&self.c_free, &self.c_blocks)
    }

    /// Stacked coefficient vector of equality `i`.
    pub fn constraint_vector(&self, i: usize) -> DVector<T> {
        let row = &self.rows[i];
        let mut free = DVector::zeros(self.free_dim);
        for &(j, c) in &row.free {
            free[j] += c;
        }
        let blocks: Vec<_> =
            self.block_sizes.iter().zip(&row.blocks).map(|(&k, e)| Self::sym_matrix(k, e)).collect();
        self.vectorize(&free, &blocks)
    }

    /// Writes the canonical form as sparse triplets.
    ///
    /// ```text
    /// # comment lines start with '#'
    /// dims <constraints> <free_dim> <block sizes...>
    /// rhs <constraint> <value>
    /// <constraint> <var> <row> <col> <value>
    /// ```
    ///
    /// Constraint `0` is the objective and equality `i` is `i + 1`. Var `0`
    /// addresses the free variables (`row` is the variable index, `col` is
    /// `0`); var `b + 1` addresses block `b`, with `row ≤ col` and `value`
    /// the entry of the symmetric coefficient matrix.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# sparse SDP canonical form")?;
        write!(w, "dims {} {}", self.rows.len(), self.free_dim)?;
        for k in &self.block_sizes {
            write!(w, " {k}")?;
        }
        writeln!(w)?;
        for (i, r) in self.rhs.iter().enumerate() {
            writeln!(w, "rhs {} {:e}", i + 1, r.as_f64())?;
        }
        for (j, c) in self.c_free.iter().enumerate() {
            if *c != T::zero() {
                writeln!(w, "0 0 {j} 0 {:e}", c.as_f64())?;
            }
        }
        for (b, m) in self.c_blocks.iter().enumerate() {
            for r in 0..m.nrows() {
                for c in r..m.ncols() {
                    if m[(r, c)] != T::zero() {
                        writeln!(w, "0 {} {r} {c} {:e}", b + 1, m[(r, c)].as_f64())?;
                    }
                }
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, c) in &row.free {
                writeln!(w, "{} 0 {j} 0 {:e}", i + 1, c.as_f64())?;
            }
            for (b, entries) in row.blocks.iter().enumerate() {
                for &(r, c, a) in entries {
                    writeln!(w, "{} {} {r} {c} {:e}", i + 1, b + 1, a.as_f64())?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym_from(k: usize, vals: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(k, k);
        let mut idx = 0;
        for r in 0..k {
            for c in r..k {
                m[(r, c)] = vals[idx];
                m[(c, r)] = vals[idx];
                idx += 1;
            }
        }
        m
    }

    #[test]
    fn two_by_two_block_has_three_entries() {
        assert_eq!(svec(&DMatrix::<f64>::identity(2, 2)).len(), 3);
        let p = SdpProblem::<f64>::new(0, vec![2, 2]);
        assert_eq!(assemble_standard_form(&p).unwrap().vector_len(), 6);
    }

    #[test]
    fn no_equalities_gives_no_rows() {
        let mut p = SdpProblem::<f64>::new(1, vec![3]);
        p.objective.add_entry(0, 0, 0, 1.0);
        let s = assemble_standard_form(&p).unwrap();
        assert_eq!(s.num_constraints(), 0);
        assert_eq!(s.c_blocks[0][(0, 0)], 1.0);
    }

    #[test]
    fn vectorized_inner_products_match_functionals() {
        let mut f = LinearFunctional::<f64>::new();
        f.add_free(0, 2.0).add_entry(0, 0, 1, 3.0).add_entry(0, 1, 1, -1.0).add_entry(1, 0, 0, 0.5);
        let mut p = SdpProblem::new(1, vec![2, 1]);
        p.add_constraint(f.clone(), 0.0);
        let s = assemble_standard_form(&p).unwrap();
        let free = DVector::from_vec(vec![1.5]);
        let blocks = vec![sym_from(2, &[1.0, 0.25, -2.0]), DMatrix::from_element(1, 1, 4.0)];
        let direct = f.eval(&free, &blocks);
        let vectorized = s.constraint_vector(0).dot(&s.vectorize(&free, &blocks));
        assert!((direct - vectorized).abs() <= 1e-14);
    }

    #[test]
    fn triplet_dump_lists_every_nonzero() {
        let mut p = SdpProblem::<f64>::new(1, vec![2]);
        p.objective.add_free(0, 1.0);
        let mut f = LinearFunctional::new();
        f.add_entry(0, 0, 1, 2.0).add_free(0, -1.0);
        p.add_constraint(f, 3.0);
        let mut out = Vec::new();
        assemble_standard_form(&p).unwrap().write_triplets(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines, ["dims 1 1 2", "rhs 1 3e0", "0 0 0 0 1e0", "1 0 0 0 -1e0", "1 1 0 1 1e0"]);
    }

    proptest! {
        #[test]
        fn svec_round_trip(k in 1usize..6, seed in proptest::collection::vec(-10.0f64..10.0, 21)) {
            let m = sym_from(k, &seed[..svec_len(k)]);
            // Exact up to the rounding of the √2 scaling.
            let back = smat(&svec(&m), k);
            for (x, y) in back.iter().zip(m.iter()) {
                prop_assert!((x - y).abs() <= 2.0 * f64::EPSILON * y.abs());
            }
        }

        #[test]
        fn svec_preserves_inner_products(a in proptest::collection::vec(-3.0f64..3.0, 10),
                                         b in proptest::collection::vec(-3.0f64..3.0, 10)) {
            let (ma, mb) = (sym_from(4, &a), sym_from(4, &b));
            prop_assert!((svec(&ma).dot(&svec(&mb)) - ma.dot(&mb)).abs() <= 1e-12);
        }
    }
}
