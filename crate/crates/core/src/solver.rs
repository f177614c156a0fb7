//! Preconditioned conjugate gradients for the assembled SPD systems.
//!
//! Everything runs sequentially with fixed accumulation order, so identical
//! inputs give bit-identical iterates. A preconditioner is a standalone
//! handle: the motion driver builds one and reuses it across steps whose
//! matrices differ only slightly.

use crate::fem::SparseSymMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("incomplete Cholesky breakdown at row {row}")]
    BreakdownIC { row: usize },
    #[error("matrix is not positive definite (pᵀAp <= 0 at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize },
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    MaxIterExceeded { x: Vec<f64>, residual: f64, iterations: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PreconditionerKind {
    None,
    Jacobi,
    #[default]
    IncompleteCholesky,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Target for `‖b − A x‖ / ‖b‖`.
    pub tol: f64,
    /// `None` means `max(10 · n, 100)`.
    pub max_iter: Option<usize>,
    pub preconditioner: PreconditionerKind,
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-10, max_iter: None, preconditioner: PreconditionerKind::default(), warm_start: None }
    }
}

impl SolverConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_preconditioner(mut self, kind: PreconditionerKind) -> Self {
        self.preconditioner = kind;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(SolverError::InvalidConfig(format!("tol must be in (0, 1), got {}", self.tol)));
        }
        if self.max_iter == Some(0) {
            return Err(SolverError::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lower-triangular incomplete Cholesky factor with the pattern of `tril(A)`.
/// Each row stores its off-diagonal entries ascending, diagonal separately.
#[derive(Clone, Debug, PartialEq)]
pub struct IcFactor {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl IcFactor {
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Entry `L[i][j]` (zero outside the pattern).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi].binary_search(&j).map_or(0.0, |k| self.vals[lo + k])
    }

    /// `z = (L Lᵀ)⁻¹ r`.
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = r[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = s / self.diag[i];
        }
        for i in (0..n).rev() {
            z[i] /= self.diag[i];
            let zi = z[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                z[self.cols[p]] -= self.vals[p] * zi;
            }
        }
    }
}

/// Zero-fill incomplete Cholesky factorization.
pub fn incomplete_cholesky(a: &SparseSymMatrix) -> Result<IcFactor, SolverError> {
    let n = a.dim();
    let mut row_ptr = vec![0];
    let mut cols = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    let mut diag = vec![0.0; n];
    for i in 0..n {
        let start = cols.len();
        let mut a_ii = 0.0;
        for (j, v) in a.row(i) {
            if j < i {
                cols.push(j);
                vals.push(v);
            } else if j == i {
                a_ii = v;
            }
        }
        for q in start..cols.len() {
            let k = cols[q];
            // s = a_ik − Σ_{j<k} L_ij L_kj over the shared pattern.
            let mut s = vals[q];
            let (klo, khi) = (row_ptr[k], row_ptr[k + 1]);
            let (mut p1, mut p2) = (start, klo);
            while p1 < q && p2 < khi {
                match cols[p1].cmp(&cols[p2]) {
                    std::cmp::Ordering::Less => p1 += 1,
                    std::cmp::Ordering::Greater => p2 += 1,
                    std::cmp::Ordering::Equal => {
                        s -= vals[p1] * vals[p2];
                        p1 += 1;
                        p2 += 1;
                    }
                }
            }
            vals[q] = s / diag[k];
        }
        let d = a_ii - vals[start..].iter().map(|v| v * v).sum::<f64>();
        if !(d > 0.0) {
            return Err(SolverError::BreakdownIC { row: i });
        }
        diag[i] = d.sqrt();
        row_ptr.push(cols.len());
    }
    Ok(IcFactor { row_ptr, cols, vals, diag })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Preconditioner {
    Identity,
    Jacobi { inverse_diagonal: Vec<f64> },
    IncompleteCholesky(IcFactor),
}

/// Reusable preconditioner; `fell_back` is set when IC(0) broke down and
/// Jacobi was used instead.
#[derive(Clone, Debug, PartialEq)]
pub struct PreconditionerHandle {
    pub preconditioner: Preconditioner,
    pub requested: PreconditionerKind,
    pub fell_back: bool,
    dim: usize,
}

impl PreconditionerHandle {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match &self.preconditioner {
            Preconditioner::Identity => z.copy_from_slice(r),
            Preconditioner::Jacobi { inverse_diagonal } => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(inverse_diagonal) {
                    *zi = ri * di;
                }
            }
            Preconditioner::IncompleteCholesky(f) => f.apply(r, z),
        }
    }
}

fn jacobi(a: &SparseSymMatrix) -> Result<Vec<f64>, SolverError> {
    a.diagonal()
        .into_iter()
        .enumerate()
        .map(|(row, d)| if d == 0.0 || !d.is_finite() { Err(SolverError::ZeroDiagonal { row }) } else { Ok(1.0 / d) })
        .collect()
}

pub fn build_preconditioner(a: &SparseSymMatrix, kind: PreconditionerKind) -> Result<PreconditionerHandle, SolverError> {
    let (preconditioner, fell_back) = match kind {
        PreconditionerKind::None => (Preconditioner::Identity, false),
        PreconditionerKind::Jacobi => (Preconditioner::Jacobi { inverse_diagonal: jacobi(a)? }, false),
        PreconditionerKind::IncompleteCholesky => {
            if let Some(row) = a.diagonal().iter().position(|&d| d == 0.0) {
                return Err(SolverError::ZeroDiagonal { row });
            }
            match incomplete_cholesky(a) {
                Ok(f) => (Preconditioner::IncompleteCholesky(f), false),
                Err(SolverError::BreakdownIC { .. }) => {
                    (Preconditioner::Jacobi { inverse_diagonal: jacobi(a)? }, true)
                }
                Err(e) => return Err(e),
            }
        }
    };
    Ok(PreconditionerHandle { preconditioner, requested: kind, fell_back, dim: a.dim() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final true relative residual `‖b − A x‖ / ‖b‖`.
    pub residual: f64,
    pub preconditioner_fell_back: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &SparseSymMatrix, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Builds the configured preconditioner and solves `A x = b`.
pub fn solve(a: &SparseSymMatrix, b: &[f64], cfg: &SolverConfig) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let pre = build_preconditioner(a, cfg.preconditioner)?;
    solve_with(a, b, cfg, &pre)
}

/// Conjugate gradients with a caller-supplied preconditioner.
pub fn solve_with(
    a: &SparseSymMatrix,
    b: &[f64],
    cfg: &SolverConfig,
    pre: &PreconditionerHandle,
) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let n = a.dim();
    for len in [b.len(), pre.dim()] {
        if len != n {
            return Err(SolverError::DimensionMismatch { expected: n, found: len });
        }
    }
    let mut x = match &cfg.warm_start {
        Some(x0) if x0.len() != n => return Err(SolverError::DimensionMismatch { expected: n, found: x0.len() }),
        Some(x0) => x0.clone(),
        None => vec![0.0; n],
    };
    let report = |x: Vec<f64>, iterations, residual| SolveReport {
        x,
        iterations,
        residual,
        preconditioner_fell_back: pre.fell_back,
    };
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(report(vec![0.0; n], 0, 0.0));
    }
    let target = cfg.tol * b_norm;
    let max_iter = cfg.max_iter.unwrap_or((10 * n).max(100));

    let mut r = vec![0.0; n];
    residual(a, b, &x, &mut r);
    if norm(&r) <= target {
        let res = norm(&r) / b_norm;
        return Ok(report(x, 0, res));
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolverError::NotPositiveDefinite { iteration: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= target {
            // Guard against drift of the recursive residual.
            residual(a, b, &x, &mut r);
            let true_norm = norm(&r);
            if true_norm <= target {
                return Ok(report(x, it, true_norm / b_norm));
            }
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    residual(a, b, &x, &mut r);
    let res = norm(&r) / b_norm;
    Err(SolverError::MaxIterExceeded { x, residual: res, iterations: max_iter })
}
