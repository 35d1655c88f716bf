//! Dense symmetric eigensolves and linear solves backed by system LAPACK.

use ndarray::Array2;

extern "C" {
    fn dsyevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn dgesv_(
        n: *const i32,
        nrhs: *const i32,
        a: *mut f64,
        lda: *const i32,
        ipiv: *mut i32,
        b: *mut f64,
        ldb: *const i32,
        info: *mut i32,
    );
}

/// Eigenvalues of a symmetric matrix, ascending. Consumes a copy of the input.
pub fn symmetric_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let ni = n as i32;
    // Symmetric input, so row-major storage is also a valid column-major view.
    let mut a: Vec<f64> = m.iter().cloned().collect();
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    // Workspace query.
    let mut work_query = [0.0f64; 1];
    let mut iwork_query = [0i32; 1];
    let lwork_query = -1i32;
    unsafe {
        dsyevd_(
            b"N".as_ptr(),
            b"L".as_ptr(),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &lwork_query,
            iwork_query.as_mut_ptr(),
            &lwork_query,
            &mut info,
        );
    }
    assert_eq!(info, 0, "dsyevd workspace query failed: info={info}");
    let lwork = work_query[0] as i32;
    let liwork = iwork_query[0].max(1);
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        dsyevd_(
            b"N".as_ptr(),
            b"L".as_ptr(),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    assert_eq!(info, 0, "dsyevd failed: info={info}");
    w
}

/// Solves `a x = b` for a symmetric `a` via LU with partial pivoting.
pub fn solve_symmetric(a: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    assert_eq!(n, b.len(), "rhs length mismatch");
    let ni = n as i32;
    let nrhs = 1i32;
    let mut lu: Vec<f64> = a.iter().cloned().collect();
    let mut x = b.to_vec();
    let mut ipiv = vec![0i32; n];
    let mut info = 0i32;
    unsafe {
        dgesv_(
            &ni,
            &nrhs,
            lu.as_mut_ptr(),
            &ni,
            ipiv.as_mut_ptr(),
            x.as_mut_ptr(),
            &ni,
            &mut info,
        );
    }
    assert_eq!(info, 0, "dgesv failed: info={info}");
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigenvalues_of_2x2() {
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let w = symmetric_eigenvalues(&m);
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!((w[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_small_system() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let x = solve_symmetric(&a, &[1.0, 2.0]);
        // residual check
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
    }
}
