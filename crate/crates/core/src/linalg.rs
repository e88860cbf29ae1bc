//! Small dense least-squares helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solution of a regularizable least-squares problem.
#[derive(Debug, Clone)]
pub struct LsSolution {
    pub x: Vec<f64>,
    /// Ridge added to the Gram diagonal, zero when the plain solve succeeded.
    pub ridge: f64,
}

/// Relative ridge applied when the Gram matrix is ill-conditioned.
pub const RIDGE_FACTOR: f64 = 1e-8;

/// Reciprocal condition estimate below which the plain solve is not trusted.
const MIN_RCOND: f64 = 1e-12;

/// Solve `G x = c` for a symmetric positive semidefinite `G`.
///
/// Falls back to `G + (1e-8 trace/L) I` when the Cholesky factorization fails
/// or the factor is numerically singular.
pub fn solve_spd(gram: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<LsSolution> {
    let n = gram.nrows();
    if gram.ncols() != n || rhs.len() != n {
        return Err(Error::invalid("gram matrix and right-hand side disagree in size"));
    }
    if n == 0 {
        return Ok(LsSolution { x: vec![], ridge: 0.0 });
    }
    if gram.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite entries in least-squares system"));
    }
    if let Some(ch) = gram.clone().cholesky() {
        let l = ch.l_dirty();
        let diag: Vec<f64> = (0..n).map(|i| l[(i, i)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if max > 0.0 && (min / max).powi(2) > MIN_RCOND {
            let x = ch.solve(rhs);
            return Ok(LsSolution {
                x: x.iter().copied().collect(),
                ridge: 0.0,
            });
        }
    }
    let trace: f64 = (0..n).map(|i| gram[(i, i)]).sum();
    let ridge = if trace > 0.0 {
        RIDGE_FACTOR * trace / n as f64
    } else {
        RIDGE_FACTOR
    };
    let mut g = gram.clone();
    for i in 0..n {
        g[(i, i)] += ridge;
    }
    let ch = g
        .cholesky()
        .ok_or_else(|| Error::InsufficientData("regularized gram matrix is not positive definite".into()))?;
    let x = ch.solve(rhs);
    Ok(LsSolution {
        x: x.iter().copied().collect(),
        ridge,
    })
}

/// Least squares `min ||A x - b||` through the normal equations, rows of `A` as observations.
pub fn least_squares(rows: &[Vec<f64>], b: &[f64]) -> Result<LsSolution> {
    if rows.len() != b.len() {
        return Err(Error::invalid("row count and target length differ"));
    }
    let n = rows.first().map_or(0, |r| r.len());
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (row, &t) in rows.iter().zip(b) {
        if row.len() != n {
            return Err(Error::invalid("ragged observation rows"));
        }
        for i in 0..n {
            rhs[i] += row[i] * t;
            for j in 0..=i {
                gram[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    solve_spd(&gram, &rhs)
}
