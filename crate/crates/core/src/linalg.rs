//! Dense complex matrix helpers shared by the simulator and the network analysis.

use ndarray::{Array2, ShapeBuilder};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(dim: usize) -> CMatrix {
    Array2::from_diag_elem(dim, ONE)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        let mut block = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
        block.zip_mut_with(b, |o, &y| *o = x * y);
    }
    out
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |(U†U - I)_ij|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let gram = adjoint(u).dot(u);
    gram.indexed_iter()
        .map(|((i, j), z)| if i == j { (z - ONE).norm() } else { z.norm() })
        .fold(0.0, f64::max)
}

/// `max |H - H†|`.
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[[i, j]] - h[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Replace `h` by `(h + h†) / 2`.
pub fn hermitize(h: &mut CMatrix) {
    let n = h.nrows();
    for i in 0..n {
        h[[i, i]].im = 0.0;
        for j in i + 1..n {
            let avg = (h[[i, j]] + h[[j, i]].conj()) * 0.5;
            h[[i, j]] = avg;
            h[[j, i]] = avg.conj();
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix (LAPACK `zheevd`, lower triangle).
///
/// Returns ascending eigenvalues and the unitary whose columns are the
/// corresponding eigenvectors.
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::Contract(format!(
            "hermitian_eigen needs a square matrix, got {}x{}",
            n,
            h.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    // column-major copy
    let mut a: Vec<Complex64> = h.t().iter().copied().collect();
    let mut w = vec![0.0f64; n];
    let order = i32::try_from(n).map_err(|_| Error::Config(format!("matrix too large: {n}")))?;
    let jobz = b'V' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    let mut info = 0i32;

    let mut work_query = [ZERO];
    let mut rwork_query = [0.0f64];
    let mut iwork_query = [0i32];
    // SAFETY: every buffer is sized as zheevd documents for a workspace query
    // (lwork = lrwork = liwork = -1) on an order-n matrix with lda = n.
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &order,
            a.as_mut_ptr().cast(),
            &order,
            w.as_mut_ptr(),
            work_query.as_mut_ptr().cast(),
            &-1,
            rwork_query.as_mut_ptr(),
            &-1,
            iwork_query.as_mut_ptr(),
            &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("zheevd workspace query failed (info = {info})")));
    }
    let lwork = work_query[0].re.ceil() as i32;
    let lrwork = rwork_query[0].ceil() as i32;
    let liwork = iwork_query[0];
    let mut work = vec![ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    // SAFETY: workspaces have the sizes returned by the query above.
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &order,
            a.as_mut_ptr().cast(),
            &order,
            w.as_mut_ptr(),
            work.as_mut_ptr().cast(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!(
            "zheevd did not converge (info = {info}) on a {n}x{n} matrix"
        )));
    }
    let vectors = Array2::from_shape_vec((n, n).f(), a)
        .expect("zheevd output has n*n entries")
        .as_standard_layout()
        .into_owned();
    Ok((w, vectors))
}
