//! Small dense least-squares helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance below which a Gram-Schmidt residual counts as zero.
const RANK_TOL: f64 = 1e-9;

/// Verify that the columns of `x` are linearly independent.
///
/// On failure the error names a minimal dependent set: the first column that
/// is spanned by its predecessors, together with the predecessors that carry
/// non-negligible weight in that representation.
pub fn check_full_rank(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    debug_assert_eq!(x.ncols(), names.len());
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(x.ncols());
    let mut independent: Vec<usize> = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut resid = col.clone();
        for q in &basis {
            let proj = q.dot(&resid);
            resid.axpy(-proj, q, 1.0);
        }
        // second pass for numerical orthogonality
        for q in &basis {
            let proj = q.dot(&resid);
            resid.axpy(-proj, q, 1.0);
        }
        let rnorm = resid.norm();
        if norm == 0.0 || rnorm <= RANK_TOL * norm {
            return Err(Error::SingularDesign {
                columns: dependent_set(x, &independent, j, names),
            });
        }
        basis.push(resid / rnorm);
        independent.push(j);
    }
    Ok(())
}

fn dependent_set(
    x: &DMatrix<f64>,
    independent: &[usize],
    j: usize,
    names: &[String],
) -> Vec<String> {
    let target = x.column(j).into_owned();
    let tnorm = target.norm();
    if tnorm == 0.0 || independent.is_empty() {
        return vec![names[j].clone()];
    }
    let sub = DMatrix::from_fn(x.nrows(), independent.len(), |r, c| x[(r, independent[c])]);
    let coef = match sub.clone().svd(true, true).solve(&target, 1e-14) {
        Ok(c) => c,
        Err(_) => return vec![names[j].clone()],
    };
    let mut out: Vec<String> = independent
        .iter()
        .enumerate()
        .filter(|&(pos, _)| (coef[pos] * sub.column(pos).norm()).abs() > 1e-8 * tnorm)
        .map(|(_, &c)| names[c].clone())
        .collect();
    out.push(names[j].clone());
    out
}

/// Least squares via column-pivot-free Householder QR. Caller must have
/// verified full column rank.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * y;
    let r = qr.r();
    r.solve_upper_triangular(&qty)
        .expect("full-rank design has invertible R")
}

/// Inverse of a symmetric positive-definite matrix, falling back to the
/// pseudo-inverse when Cholesky fails.
pub fn spd_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    match a.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => a
            .clone()
            .pseudo_inverse(1e-14)
            .unwrap_or_else(|_| DMatrix::zeros(a.nrows(), a.ncols())),
    }
}

/// Solve the normal equations `a x = b` for symmetric PSD `a`, using the
/// minimum-norm solution when `a` is singular.
pub fn solve_normal(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = a.clone().cholesky() {
        let sol = ch.solve(b);
        if sol.iter().all(|v| v.is_finite()) {
            return sol;
        }
    }
    a.clone()
        .svd(true, true)
        .solve(b, 1e-12 * a.diagonal().amax().max(1e-300))
        .unwrap_or_else(|_| DVector::zeros(b.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn full_rank_passes() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        check_full_rank(&x, &names(2)).unwrap();
    }

    #[test]
    fn dependent_column_is_named_with_its_span() {
        // x2 = 2*x0, x1 unrelated
        let x = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 0.0, 2.0, 2.0, 1.0, 4.0, 3.0, 0.0, 6.0, 4.0, 1.0, 8.0],
        );
        match check_full_rank(&x, &names(3)) {
            Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec!["x0", "x2"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_column_is_singular_alone() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        match check_full_rank(&x, &names(2)) {
            Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec!["x1"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn least_squares_exact() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let b = least_squares(&x, &y);
        assert!((b[0] - 2.0).abs() < 1e-14);
    }
}
