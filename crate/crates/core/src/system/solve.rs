//! Sparse SPD solvers: a direct `LLᵀ` factorization for moderate sizes and
//! Jacobi-preconditioned conjugate gradients above.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};
use log::debug;

use super::sparse::CsrMatrix;
use super::SystemError;
use crate::exec::Execution;

/// Above this many unknowns the iterative solver is used.
pub const DIRECT_LIMIT: usize = 200_000;
pub const RESIDUAL_TOL: f64 = 1e-10;
const REFINE_STEPS: usize = 3;

pub enum Factorization {
    Direct { llt: Llt<usize, f64>, n: usize },
    Iterative { inv_diag: Vec<f64> },
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Factorization::Direct { n, .. } => write!(f, "Direct({n})"),
            Factorization::Iterative { inv_diag } => write!(f, "Iterative({})", inv_diag.len()),
        }
    }
}

fn lower_csc(a: &CsrMatrix) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    // column j of the lower triangle is row j of the upper triangle
    let mut colptr = Vec::with_capacity(a.nrows() + 1);
    let mut rows = Vec::new();
    let mut vals = Vec::new();
    colptr.push(0);
    for j in 0..a.nrows() {
        for (i, v) in a.row(j) {
            if i >= j {
                rows.push(i);
                vals.push(v);
            }
        }
        colptr.push(rows.len());
    }
    (colptr, rows, vals)
}

impl Factorization {
    pub fn new(a: &CsrMatrix) -> Result<Self, SystemError> {
        Self::with_limit(a, DIRECT_LIMIT)
    }

    pub fn with_limit(a: &CsrMatrix, direct_limit: usize) -> Result<Self, SystemError> {
        let n = a.nrows();
        if n > direct_limit {
            let inv_diag = a
                .diagonal()
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
                .collect();
            return Ok(Factorization::Iterative { inv_diag });
        }
        let (colptr, rows, vals) = lower_csc(a);
        let symbolic = SymbolicSparseColMatRef::new_checked(n, n, &colptr, None, &rows);
        let sym = SymbolicLlt::try_new(symbolic, Side::Lower).map_err(|e| SystemError::Factorization(format!("{e:?}")))?;
        let llt = Llt::try_new_with_symbolic(sym, SparseColMatRef::new(symbolic, &vals), Side::Lower)
            .map_err(|e| SystemError::Factorization(format!("{e:?}")))?;
        Ok(Factorization::Direct { llt, n })
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Factorization::Direct { llt, n } => {
                let mut rhs = Mat::<f64>::from_fn(*n, 1, |i, _| r[i]);
                llt.solve_in_place(rhs.as_mut());
                (0..*n).map(|i| rhs[(i, 0)]).collect()
            }
            Factorization::Iterative { inv_diag } => r.iter().zip(inv_diag).map(|(a, b)| a * b).collect(),
        }
    }

    /// Solves `A u = b` to relative residual [`RESIDUAL_TOL`] (absolute when
    /// `b = 0`).
    pub fn solve(&self, a: &CsrMatrix, b: &[f64], exec: Execution) -> Result<Vec<f64>, SystemError> {
        match self {
            Factorization::Direct { .. } => {
                let bnorm = norm(b);
                let target = if bnorm > 0.0 { RESIDUAL_TOL * bnorm } else { RESIDUAL_TOL };
                let mut u = self.apply(b);
                let mut res = f64::INFINITY;
                for _ in 0..=REFINE_STEPS {
                    let r = residual(a, &u, b, exec);
                    res = norm(&r);
                    if res <= target {
                        return Ok(u);
                    }
                    let du = self.apply(&r);
                    u.iter_mut().zip(du).for_each(|(x, d)| *x += d);
                }
                let r = norm(&residual(a, &u, b, exec));
                if r <= target {
                    Ok(u)
                } else {
                    Err(SystemError::NotConverged { residual: res.min(r) / bnorm.max(1.0), iterations: REFINE_STEPS })
                }
            }
            Factorization::Iterative { .. } => pcg(a, b, |r| self.apply(r), exec),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `b − A u`.
pub fn residual(a: &CsrMatrix, u: &[f64], b: &[f64], exec: Execution) -> Vec<f64> {
    let au = a.mul_vec(u, exec);
    b.iter().zip(au).map(|(bi, ai)| bi - ai).collect()
}

pub fn relative_residual(a: &CsrMatrix, u: &[f64], b: &[f64], exec: Execution) -> f64 {
    let r = norm(&residual(a, u, b, exec));
    let bn = norm(b);
    if bn > 0.0 { r / bn } else { r }
}

fn pcg(a: &CsrMatrix, b: &[f64], precond: impl Fn(&[f64]) -> Vec<f64>, exec: Execution) -> Result<Vec<f64>, SystemError> {
    let n = b.len();
    let max_iter = (10 * n).max(1000);
    let bnorm = norm(b);
    let target = if bnorm > 0.0 { RESIDUAL_TOL * bnorm } else { RESIDUAL_TOL };
    let mut u = vec![0.0; n];
    let mut r = b.to_vec();
    if norm(&r) <= target {
        return Ok(u);
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        let ap = a.mul_vec(&p, exec);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = norm(&r);
        if rn <= target {
            debug!("pcg converged in {} iterations", it + 1);
            return Ok(u);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SystemError::NotConverged { residual: norm(&r) / bnorm.max(f64::MIN_POSITIVE), iterations: max_iter })
}
