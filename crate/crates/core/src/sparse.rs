//! Compressed-row matrices, constrained linear systems and their solution.
//!
//! Factorization is delegated to faer's supernodal sparse LU. The CSR arrays
//! of `A` are handed to faer as the CSC arrays of `Aᵀ`, which is factored and
//! solved transposed, so no copy is made. The symbolic analysis depends only
//! on the sparsity pattern and is memoized per pattern.

use std::sync::{Arc, Mutex, Weak};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Col;

use crate::error::{Error, Result};

/// Sorted CSR sparsity structure.
#[derive(Debug, PartialEq, Eq)]
pub struct Pattern {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Pattern {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    #[inline]
    fn position(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.row(r).binary_search(&c).ok().map(|i| start + i)
    }
}

#[derive(Debug)]
pub struct PatternBuilder {
    n_cols: usize,
    rows: Vec<Vec<usize>>,
}

impl PatternBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        PatternBuilder {
            n_cols,
            rows: vec![Vec::new(); n_rows],
        }
    }

    /// Couples every pair of `dofs`.
    pub fn add_element(&mut self, dofs: &[usize]) {
        for &r in dofs {
            self.rows[r].extend_from_slice(dofs);
        }
    }

    /// Couples rows `rows` with columns `cols`.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize]) {
        for &r in rows {
            self.rows[r].extend_from_slice(cols);
        }
    }

    pub fn add_entry(&mut self, r: usize, c: usize) {
        self.rows[r].push(c);
    }

    pub fn build(self) -> Arc<Pattern> {
        let n_rows = self.rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for (r, mut row) in self.rows.into_iter().enumerate() {
            // the diagonal is always present so constraint rows are representable
            if r < self.n_cols {
                row.push(r);
            }
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(&row);
            row_ptr.push(col_idx.len());
        }
        Arc::new(Pattern {
            n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
        })
    }
}

/// CSR matrix over a shared [`Pattern`].
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = PatternBuilder::new(n, n);
        for i in 0..n {
            b.add_entry(i, i);
        }
        let mut m = CsrMatrix::zeros(b.build());
        for i in 0..n {
            m.add(i, i, 1.0);
        }
        m
    }

    /// Dense-to-sparse helper, mostly for tests.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut b = PatternBuilder::new(n, n);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    b.add_entry(r, c);
                }
            }
        }
        let mut m = CsrMatrix::zeros(b.build());
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    m.add(r, c, *v);
                }
            }
        }
        m
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Adds `v` at `(r, c)`; panics if the entry is outside the pattern.
    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let pos = self
            .pattern
            .position(r, c)
            .unwrap_or_else(|| panic!("entry ({r}, {c}) not in sparsity pattern"));
        self.values[pos] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pattern.position(r, c).map_or(0.0, |p| self.values[p])
    }

    /// Adds a dense local block `local[i * cols.len() + j]`.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], local: &[f64]) {
        let nc = cols.len();
        for (i, &r) in rows.iter().enumerate() {
            let start = self.pattern.row_ptr[r];
            let row = self.pattern.row(r);
            for (j, &c) in cols.iter().enumerate() {
                let v = local[i * nc + j];
                if v != 0.0 {
                    let k = row
                        .binary_search(&c)
                        .unwrap_or_else(|_| panic!("entry ({r}, {c}) not in sparsity pattern"));
                    self.values[start + k] += v;
                }
            }
        }
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.pattern.row_ptr[r]..self.pattern.row_ptr[r + 1];
        self.pattern.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for r in 0..p.n_rows {
            let mut s = 0.0;
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            y[r] = s;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows())
            .map(|r| self.row_entries(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn as_faer_transposed(&self) -> SparseColMatRef<'_, usize, f64> {
        let p = &self.pattern;
        let sym = SymbolicSparseColMatRef::new_checked(p.n_cols, p.n_rows, &p.row_ptr, None, &p.col_idx);
        SparseColMatRef::new(sym, &self.values)
    }
}

/// Square system `A x = b` with Dirichlet constraints `x[i] = g`.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constraints: Vec<(usize, f64)>,
    applied: bool,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Result<Self> {
        if matrix.n_rows() != matrix.n_cols() || matrix.n_rows() != rhs.len() {
            return Err(Error::Dimension(format!(
                "matrix {}x{} with right-hand side of length {}",
                matrix.n_rows(),
                matrix.n_cols(),
                rhs.len()
            )));
        }
        Ok(SparseSystem {
            matrix,
            rhs,
            constraints: Vec::new(),
            applied: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn constrain(&mut self, dof: usize, value: f64) {
        self.constraints.push((dof, value));
        self.applied = false;
    }

    /// Row replacement with unit diagonal; the constrained columns are moved
    /// into the right-hand side so untouched rows keep their symmetry. The
    /// pattern is left unchanged (eliminated entries become explicit zeros).
    pub fn apply_constraints(&mut self) {
        if self.applied {
            return;
        }
        let n = self.dim();
        let mut fixed: Vec<Option<f64>> = vec![None; n];
        for &(d, g) in &self.constraints {
            fixed[d] = Some(g);
        }
        let p = self.matrix.pattern.clone();
        let vals = &mut self.matrix.values;
        for r in 0..n {
            let range = p.row_ptr[r]..p.row_ptr[r + 1];
            if let Some(g) = fixed[r] {
                for k in range {
                    vals[k] = if p.col_idx[k] == r { 1.0 } else { 0.0 };
                }
                self.rhs[r] = g;
            } else {
                for k in range {
                    if let Some(g) = fixed[p.col_idx[k]] {
                        self.rhs[r] -= vals[k] * g;
                        vals[k] = 0.0;
                    }
                }
            }
        }
        self.applied = true;
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        ax.iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Linear solver choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    Direct,
    /// Jacobi-preconditioned BiCGSTAB.
    Krylov { tol: f64, max_iter: usize },
}

/// Symbolic analyses keyed by sparsity pattern. Coupled runs refactor the
/// same few patterns thousands of times; the memo keeps the solvers pure.
fn cached_symbolic(pattern: &Arc<Pattern>, a_t: SparseColMatRef<'_, usize, f64>) -> Result<SymbolicLu<usize>> {
    type Memo = Vec<(Weak<Pattern>, SymbolicLu<usize>)>;
    static MEMO: Mutex<Memo> = Mutex::new(Vec::new());
    {
        let mut memo = MEMO.lock().unwrap_or_else(|e| e.into_inner());
        memo.retain(|(w, _)| w.strong_count() > 0);
        for (w, s) in memo.iter() {
            if let Some(p) = w.upgrade() {
                if Arc::ptr_eq(&p, pattern) || *p == **pattern {
                    return Ok(s.clone());
                }
            }
        }
    }
    let s = SymbolicLu::try_new(a_t.symbolic())
        .map_err(|e| Error::SingularMatrix(format!("symbolic analysis failed: {e:?}")))?;
    let mut memo = MEMO.lock().unwrap_or_else(|e| e.into_inner());
    if memo.len() >= 8 {
        memo.remove(0);
    }
    memo.push((Arc::downgrade(pattern), s.clone()));
    Ok(s)
}

/// Sparse LU with iterative refinement and a residual check.
#[derive(Debug, Default, Clone, Copy)]
pub struct DirectSolver;

impl DirectSolver {
    pub fn new() -> Self {
        DirectSolver
    }

    pub fn solve(&self, system: &mut SparseSystem) -> Result<Vec<f64>> {
        system.apply_constraints();
        let lu = factorize(system)?;
        refined_solve(system, &lu)
    }
}

fn factorize(system: &SparseSystem) -> Result<Lu<usize, f64>> {
    let a_t = system.matrix.as_faer_transposed();
    let symbolic = cached_symbolic(system.matrix.pattern(), a_t)?;
    Lu::try_new_with_symbolic(symbolic, a_t).map_err(|e| Error::SingularMatrix(format!("{e:?}")))
}

fn lu_solve(lu: &Lu<usize, f64>, rhs: &[f64]) -> Vec<f64> {
    let mut x = Col::<f64>::from_fn(rhs.len(), |i| rhs[i]);
    lu.solve_transpose_in_place(x.as_mat_mut());
    (0..rhs.len()).map(|i| x[i]).collect()
}

/// Residual small relative to `b`, or at the rounding level of `A x`.
fn acceptable(system: &SparseSystem, x: &[f64], r: &[f64]) -> bool {
    let rn = norm(r);
    let b_norm = norm(&system.rhs);
    let x_inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    rn.is_finite()
        && x.iter().all(|v| v.is_finite())
        && (rn <= 1e-10 * b_norm || rn <= 1e-11 * system.matrix.norm_inf() * x_inf * (system.dim() as f64).sqrt())
}

/// LU solve with up to four steps of iterative refinement and a residual check.
fn refined_solve(system: &SparseSystem, lu: &Lu<usize, f64>) -> Result<Vec<f64>> {
    let mut x = lu_solve(lu, &system.rhs);
    let b_norm = norm(&system.rhs);
    let mut r = residual(system, &x);
    for _ in 0..4 {
        let rn = norm(&r);
        if !rn.is_finite() {
            break;
        }
        if rn <= 1e-10 * b_norm || rn == 0.0 {
            break;
        }
        let dx = lu_solve(lu, &r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        let r_new = residual(system, &x);
        if norm(&r_new) >= rn {
            // refinement stalled at rounding level; undo the step
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi -= d;
            }
            break;
        }
        r = r_new;
    }
    if x.iter().any(|v| !v.is_finite()) || !norm(&r).is_finite() {
        return Err(Error::SingularMatrix("factorization produced non-finite values".into()));
    }
    if !acceptable(system, &x, &r) {
        return Err(Error::SingularMatrix(format!(
            "residual {:.3e} after refinement (|b| = {b_norm:.3e})",
            norm(&r)
        )));
    }
    Ok(x)
}

fn residual(system: &SparseSystem, x: &[f64]) -> Vec<f64> {
    let mut r = system.matrix.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(&system.rhs) {
        *ri = bi - *ri;
    }
    r
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Applies constraints and solves with the requested method.
pub fn solve_sparse(system: &mut SparseSystem, kind: SolverKind) -> Result<Vec<f64>> {
    match kind {
        SolverKind::Direct => DirectSolver::new().solve(system),
        SolverKind::Krylov { tol, max_iter } => bicgstab(system, tol, max_iter),
    }
}

fn bicgstab(system: &mut SparseSystem, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    system.apply_constraints();
    let n = system.dim();
    let a = &system.matrix;
    let b = &system.rhs;
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.get(i, i);
            if d != 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&diag).map(|(x, d)| x * d).collect() };
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut rel = norm(&r) / b_norm;
    if rel <= tol {
        return Ok(x);
    }
    for _ in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y = precond(&p);
        v = a.mul_vec(&y);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm(&s) / b_norm <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(x);
        }
        let z = precond(&s);
        let t = a.mul_vec(&z);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rel = norm(&r) / b_norm;
        if rel <= tol {
            return Ok(x);
        }
        if !rel.is_finite() || omega == 0.0 {
            break;
        }
    }
    Err(Error::SolverNotConverged { residual: rel })
}

/// Solves with a cached Cholesky factor of an SPD matrix (mass matrices).
pub struct CholeskySolver {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl std::fmt::Debug for CholeskySolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("CholeskySolver")
    }
}

impl CholeskySolver {
    /// `matrix` must be symmetric positive definite.
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        // symmetric: the CSR arrays double as CSC arrays
        let a = matrix.as_faer_transposed();
        let llt = a
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| Error::SingularMatrix(format!("Cholesky failed: {e:?}")))?;
        Ok(CholeskySolver { llt })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let mut x = Col::<f64>::from_fn(n, |i| rhs[i]);
        self.llt.solve_in_place(x.as_mat_mut());
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = x[i];
        }
    }
}
