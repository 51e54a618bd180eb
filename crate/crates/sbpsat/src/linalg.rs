//! Dense linear algebra helpers backed by LAPACK.

use crate::error::{Error, Result};
use ndarray::{s, Array1, Array2};
use ndarray_linalg::{EigVals, EigValsh, SVD, UPLO};

pub use ndarray_linalg::c64;

/// Eigenvalues of a symmetric matrix in ascending order (lower triangle is read).
pub fn symmetric_eigenvalues(a: &Array2<f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let ev = a.eigvalsh(UPLO::Lower)?;
    let mut v = ev.to_vec();
    v.sort_by(|x, y| x.total_cmp(y));
    Ok(v)
}

/// Eigenvalues of a general real square matrix.
pub fn general_eigenvalues(a: &Array2<f64>) -> Result<Vec<c64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    Ok(a.eigvals()?.to_vec())
}

/// Largest entry of `|A - Aᵀ|`.
pub fn asymmetry(a: &Array2<f64>) -> f64 {
    let mut m = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            m = m.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    m
}

/// Result of [`constrained_least_squares`].
#[derive(Clone, Debug)]
pub struct ConstrainedSolution {
    pub x: Array1<f64>,
    /// Max-norm residual of the equality constraints.
    pub feasibility: f64,
    /// Dimension of the constraint null space (free parameters before the objective).
    pub free_parameters: usize,
}

/// Minimum-norm least-squares solution of `A x ≈ b` via the SVD.
pub fn min_norm_lstsq(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return Ok(Array1::zeros(n));
    }
    let (u, sv, vt) = a.svd(true, true)?;
    let (u, vt) = (u.unwrap(), vt.unwrap());
    let tol = sv.get(0).copied().unwrap_or(0.0) * 1e-12 * (a.nrows().max(n) as f64);
    let mut x = Array1::zeros(n);
    for (k, &sk) in sv.iter().enumerate() {
        if sk > tol {
            let coef = u.column(k).dot(b) / sk;
            x.scaled_add(coef, &vt.row(k));
        }
    }
    Ok(x)
}

/// Minimizes `‖A x − b‖₂` subject to `C x = d`; remaining freedom is resolved by the
/// minimum-norm choice.
///
/// Returns [`Error::ConstraintSystemInfeasible`] if the constraints cannot be met to
/// `feas_tol` (max norm).
pub fn constrained_least_squares(
    a: &Array2<f64>,
    b: &Array1<f64>,
    c: &Array2<f64>,
    d: &Array1<f64>,
    feas_tol: f64,
) -> Result<ConstrainedSolution> {
    let n = c.ncols().max(a.ncols());
    if c.nrows() == 0 {
        let x = min_norm_lstsq(a, b)?;
        return Ok(ConstrainedSolution { x, feasibility: 0.0, free_parameters: n });
    }
    let (_, sv, vt) = c.svd(false, true)?;
    let vt = vt.unwrap();
    let tol = sv[0] * 1e-10;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let x0 = min_norm_lstsq(c, d)?;
    let feasibility = (c.dot(&x0) - d).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if feasibility > feas_tol {
        return Err(Error::ConstraintSystemInfeasible {
            residual: feasibility,
            rank_defect: c.nrows().saturating_sub(rank),
        });
    }
    let null = vt.slice(s![rank.., ..]).t().to_owned();
    let free = null.ncols();
    if free == 0 || a.nrows() == 0 {
        return Ok(ConstrainedSolution { x: x0, feasibility, free_parameters: free });
    }
    let an = a.dot(&null);
    let y = min_norm_lstsq(&an, &(b - &a.dot(&x0)))?;
    let x = x0 + null.dot(&y);
    let feasibility = (c.dot(&x) - d).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ConstrainedSolution { x, feasibility, free_parameters: free })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn symmetric_eigs_of_known_matrix() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let ev = symmetric_eigenvalues(&a).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn general_eigs_of_rotation() {
        let a = array![[0.0, -1.0], [1.0, 0.0]];
        let ev = general_eigenvalues(&a).unwrap();
        for z in ev {
            assert!(z.re.abs() < 1e-14 && (z.im.abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn constrained_solution_hits_constraint_and_minimizes() {
        // min (x0-1)^2 + (x1-1)^2 + x2^2 s.t. x0 + x1 + x2 = 1
        let a = Array2::eye(3);
        let b = array![1.0, 1.0, 0.0];
        let c = array![[1.0, 1.0, 1.0]];
        let d = array![1.0];
        let sol = constrained_least_squares(&a, &b, &c, &d, 1e-12).unwrap();
        let exact = array![2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0];
        assert!((&sol.x - &exact).iter().all(|v| v.abs() < 1e-12));
        assert_eq!(sol.free_parameters, 2);
    }

    #[test]
    fn inconsistent_constraints_are_reported() {
        let c = array![[1.0, 0.0], [1.0, 0.0]];
        let d = array![0.0, 1.0];
        let err = constrained_least_squares(&Array2::zeros((0, 2)), &Array1::zeros(0), &c, &d, 1e-10);
        assert!(matches!(err, Err(Error::ConstraintSystemInfeasible { rank_defect: 1, .. })));
    }
}
