//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Standard complex structure on R^{2n} in (x, y) coordinates: J(x, y) = (-y, x).
pub fn complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// max |Q^T J Q - J|.
pub fn symplectic_residual(q: &DMatrix<f64>) -> f64 {
    let n = q.nrows() / 2;
    let j = complex_structure(n);
    max_abs(&(q.transpose() * &j * q - j))
}

pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

pub fn min_singular(m: &DMatrix<f64>) -> f64 {
    singular_values(m).min()
}

/// Eigenvalues of a symmetric matrix, ascending.
///
/// The decomposition is checked against the trace and Frobenius invariants;
/// a mismatch is reported as [`Error::EigenFailure`] with the larger residual.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = m.nrows();
    if is_diagonal(m) {
        let mut ev: Vec<f64> = (0..dim).map(|i| m[(i, i)]).collect();
        ev.sort_by(f64::total_cmp);
        return Ok(ev);
    }
    let ev = m.clone().symmetric_eigenvalues();
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure {
            residual: f64::INFINITY,
        });
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let trace_res = (ev.sum() - m.trace()).abs() / scale;
    let frob_res = (ev.norm_squared().sqrt() - m.norm()).abs() / scale;
    let residual = trace_res.max(frob_res);
    if residual > 1e-8 * (dim as f64).max(1.0) {
        return Err(Error::EigenFailure { residual });
    }
    let mut ev: Vec<f64> = ev.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j && m[(i, j)] != 0.0 {
                return false;
            }
        }
    }
    true
}

/// Orthonormal basis (as columns) of the numerical kernel of `m`:
/// right singular vectors whose singular value is at most `tol`.
pub fn kernel_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(m.ncols(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if nr == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::InvalidInput(format!("{what}: ragged or empty matrix")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub(crate) const SQRT3_6: f64 = 0.288_675_134_594_812_9;
/// Nodes of the two-stage Gauss-Legendre collocation method on [0, 1].
pub(crate) const GAUSS_NODES: [f64; 2] = [0.5 - SQRT3_6, 0.5 + SQRT3_6];
pub(crate) const GAUSS_A: [[f64; 2]; 2] = [[0.25, 0.25 - SQRT3_6], [0.25 + SQRT3_6, 0.25]];

/// Propagator of one two-stage Gauss step for the linear system
/// Y' = A(t) Y, given A at the two collocation nodes.
///
/// The method is symplectic, so for Hamiltonian A = J R the result is
/// symplectic up to round-off.
pub(crate) fn gauss_linear_step(a1: &DMatrix<f64>, a2: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let d = a1.nrows();
    let mut lhs = DMatrix::<f64>::identity(2 * d, 2 * d);
    let mut rhs = DMatrix::<f64>::zeros(2 * d, d);
    for (row, a) in [a1, a2].into_iter().enumerate() {
        for (col, coef) in GAUSS_A[row].iter().enumerate() {
            let block = a * (-h * coef);
            let mut view = lhs.view_mut((row * d, col * d), (d, d));
            view += block;
        }
        rhs.view_mut((row * d, 0), (d, d)).copy_from(a);
    }
    let k = lhs
        .lu()
        .solve(&rhs)
        .expect("Gauss stage system is invertible for small steps");
    let k1 = k.view((0, 0), (d, d));
    let k2 = k.view((d, 0), (d, d));
    DMatrix::identity(d, d) + (k1 + k2) * (0.5 * h)
}
