//! Thin wrappers around the LAPACK symmetric eigensolvers and SVD.
//!
//! All matrices are `nalgebra::DMatrix<f64>` (column-major, which is what
//! LAPACK expects). Eigenvalues come back ascending; generalized solves
//! return M-orthonormal eigenvectors (VᵀMV = I).

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

fn check(routine: &'static str, info: i32) -> Result<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Lapack { routine, info })
    }
}

/// Eigendecomposition of a symmetric matrix: A = V diag(w) Vᵀ, VᵀV = I.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch("sym_eigen needs a square matrix".into()));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let mut v = a.clone();
    let mut w = vec![0.0; n];
    let mut info = 0;
    let (mut wq, mut iwq) = (vec![0.0], vec![0]);
    unsafe {
        lapack::dsyevd(b'V', b'L', n as i32, v.as_mut_slice(), n as i32, &mut w, &mut wq, -1, &mut iwq, -1, &mut info);
    }
    check("dsyevd", info)?;
    let (lwork, liwork) = (wq[0] as usize, iwq[0] as usize);
    let mut work = vec![0.0; lwork];
    let mut iwork = vec![0; liwork];
    unsafe {
        lapack::dsyevd(b'V', b'L', n as i32, v.as_mut_slice(), n as i32, &mut w, &mut work, lwork as i32, &mut iwork, liwork as i32, &mut info);
    }
    check("dsyevd", info)?;
    Ok((DVector::from_vec(w), v))
}

/// Generalized symmetric-definite eigenproblem K x = λ M x (M positive
/// definite). Returns all eigenvalues ascending with M-orthonormal vectors.
pub fn gen_sym_eigen(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch("gen_sym_eigen needs square K, M of equal size".into()));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let mut v = k.clone();
    let mut b = m.clone();
    let mut w = vec![0.0; n];
    let mut info = 0;
    let (mut wq, mut iwq) = (vec![0.0], vec![0]);
    unsafe {
        lapack::dsygvd(&[1], b'V', b'L', n as i32, v.as_mut_slice(), n as i32, b.as_mut_slice(), n as i32, &mut w, &mut wq, -1, &mut iwq, -1, &mut info);
    }
    check("dsygvd", info)?;
    let (lwork, liwork) = (wq[0] as usize, iwq[0] as usize);
    let mut work = vec![0.0; lwork];
    let mut iwork = vec![0; liwork];
    unsafe {
        lapack::dsygvd(&[1], b'V', b'L', n as i32, v.as_mut_slice(), n as i32, b.as_mut_slice(), n as i32, &mut w, &mut work, lwork as i32, &mut iwork, liwork as i32, &mut info);
    }
    check("dsygvd", info)?;
    Ok((DVector::from_vec(w), v))
}

/// Lowest `count` eigenpairs of K x = λ M x via the index-range expert driver.
pub fn gen_sym_eigen_lowest(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
    count: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch("gen_sym_eigen_lowest needs square K, M of equal size".into()));
    }
    if count == 0 || n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(n, 0)));
    }
    let count = count.min(n);
    let mut a = k.clone();
    let mut b = m.clone();
    let mut w = vec![0.0; n];
    let mut z = DMatrix::<f64>::zeros(n, count);
    let mut found = 0;
    let mut ifail = vec![0; n];
    let mut iwork = vec![0; 5 * n];
    let mut info = 0;
    let mut wq = vec![0.0];
    unsafe {
        lapack::dsygvx(
            &[1], b'V', b'I', b'L', n as i32, a.as_mut_slice(), n as i32, b.as_mut_slice(), n as i32,
            0.0, 0.0, 1, count as i32, 2.0 * f64::EPSILON, &mut found, &mut w,
            z.as_mut_slice(), n as i32, &mut wq, -1, &mut iwork, &mut ifail, &mut info,
        );
    }
    check("dsygvx", info)?;
    let lwork = wq[0] as usize;
    let mut work = vec![0.0; lwork];
    unsafe {
        lapack::dsygvx(
            &[1], b'V', b'I', b'L', n as i32, a.as_mut_slice(), n as i32, b.as_mut_slice(), n as i32,
            0.0, 0.0, 1, count as i32, 2.0 * f64::EPSILON, &mut found, &mut w,
            z.as_mut_slice(), n as i32, &mut work, lwork as i32, &mut iwork, &mut ifail, &mut info,
        );
    }
    check("dsygvx", info)?;
    w.truncate(found as usize);
    Ok((DVector::from_vec(w), z.columns(0, found as usize).into_owned()))
}

/// Singular values of a rectangular matrix, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(DVector::zeros(0));
    }
    let mut work_a = a.clone();
    let mn = m.min(n);
    let mut s = vec![0.0; mn];
    let mut u = vec![0.0; 1];
    let mut vt = vec![0.0; 1];
    let mut iwork = vec![0; 8 * mn];
    let mut info = 0;
    let mut wq = vec![0.0];
    unsafe {
        lapack::dgesdd(
            b'N', m as i32, n as i32, work_a.as_mut_slice(), m as i32, &mut s,
            &mut u, 1, &mut vt, 1, &mut wq, -1, &mut iwork, &mut info,
        );
    }
    check("dgesdd", info)?;
    let lwork = wq[0] as usize;
    let mut work = vec![0.0; lwork];
    unsafe {
        lapack::dgesdd(
            b'N', m as i32, n as i32, work_a.as_mut_slice(), m as i32, &mut s,
            &mut u, 1, &mut vt, 1, &mut work, lwork as i32, &mut iwork, &mut info,
        );
    }
    check("dgesdd", info)?;
    Ok(DVector::from_vec(s))
}

/// Largest singular value (operator 2-norm); 0 for empty matrices.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(a)?.get(0).copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sym_eigen_diag() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let (w, v) = sym_eigen(&a).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], 3.0, epsilon = 1e-12);
        let id = v.transpose() * &v;
        assert_abs_diff_eq!((id - DMatrix::identity(3, 3)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gen_eigen_mass_orthonormal() {
        let k = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let (w, v) = gen_sym_eigen(&k, &m).unwrap();
        let g = v.transpose() * &m * &v;
        assert_abs_diff_eq!((g - DMatrix::identity(2, 2)).norm(), 0.0, epsilon = 1e-10);
        for i in 0..2 {
            let r = &k * v.column(i) - w[i] * (&m * v.column(i));
            assert!(r.norm() < 1e-10);
        }
    }

    #[test]
    fn lowest_matches_full() {
        let n = 20;
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = 2.0;
            if i + 1 < n {
                k[(i, i + 1)] = -1.0;
                k[(i + 1, i)] = -1.0;
            }
        }
        let m = DMatrix::identity(n, n);
        let (wf, _) = gen_sym_eigen(&k, &m).unwrap();
        let (wl, vl) = gen_sym_eigen_lowest(&k, &m, 4).unwrap();
        assert_eq!(wl.len(), 4);
        for i in 0..4 {
            assert_abs_diff_eq!(wl[i], wf[i], epsilon = 1e-10);
            let r = &k * vl.column(i) - wl[i] * (&m * vl.column(i));
            assert!(r.norm() < 1e-8);
        }
    }

    #[test]
    fn svd_rank_one() {
        let a = DMatrix::from_fn(3, 2, |i, j| ((i + 1) * (j + 1)) as f64);
        let s = singular_values(&a).unwrap();
        // rank-1: s = |(1,2,3)|·|(1,2)| = sqrt(14)·sqrt(5)
        assert_abs_diff_eq!(s[0], (14.0f64 * 5.0).sqrt(), epsilon = 1e-10);
        assert!(s[1].abs() < 1e-12);
    }
}
