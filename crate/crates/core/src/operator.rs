//! Dense operator arithmetic: trace and max norms, Hermitian eigensystems.

use nalgebra::linalg::{SymmetricEigen, SVD};

use crate::{CMat, CVec, Error, Result, C64};

/// Relative Hermiticity tolerance used by the checked entry points.
pub const HERM_TOL: f64 = 1e-12;

fn ensure_finite(a: &CMat) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("non-finite matrix entry".into()))
    }
}

fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation `|A_ij - conj(A_ji)|`.
pub fn hermitian_deviation(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(a: &CMat, rel_tol: f64) -> bool {
    a.is_square() && hermitian_deviation(a) <= rel_tol * max_abs(a).max(f64::MIN_POSITIVE)
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Sum of singular values.
pub fn trace_norm(a: &CMat) -> Result<f64> {
    ensure_finite(a)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    if is_hermitian(a, HERM_TOL) {
        let (vals, _) = herm_eig_unchecked(&hermitian_part(a));
        return Ok(vals.iter().map(|v| v.abs()).sum());
    }
    Ok(SVD::new(a.clone(), false, false).singular_values.sum())
}

/// Largest singular value.
pub fn max_norm(a: &CMat) -> Result<f64> {
    ensure_finite(a)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    if is_hermitian(a, HERM_TOL) {
        let (vals, _) = herm_eig_unchecked(&hermitian_part(a));
        return Ok(vals.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    Ok(SVD::new(a.clone(), false, false).singular_values.max())
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
/// orthonormal eigenvector columns, each with its largest-magnitude
/// component made real and positive.
pub fn herm_eig(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    ensure_finite(a)?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch("herm_eig needs a square matrix".into()));
    }
    if !is_hermitian(a, HERM_TOL) {
        return Err(Error::NonHermitian(hermitian_deviation(a)));
    }
    Ok(herm_eig_unchecked(&hermitian_part(a)))
}

pub(crate) fn herm_eig_unchecked(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        fix_phase(&mut v);
        vecs.set_column(c, &v);
    }
    (vals, vecs)
}

/// Rotates `v` so its largest-magnitude component (first one on ties) is
/// real and positive.
pub(crate) fn fix_phase(v: &mut CVec) {
    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() >= big * (1.0 - 1e-12)).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `|ψ⟩⟨ψ|`.
pub fn projector(psi: &CVec) -> CMat {
    psi * psi.adjoint()
}

/// `Π₊ − Π₋` for a Hermitian matrix, zero eigenvalues counted as positive.
pub fn sign_operator(m: &CMat) -> CMat {
    let (vals, vecs) = herm_eig_unchecked(&hermitian_part(m));
    let signs = CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&v| C64::new(if v >= 0.0 { 1.0 } else { -1.0 }, 0.0)),
    );
    &vecs * CMat::from_diagonal(&signs) * vecs.adjoint()
}

/// Builds a matrix from real-imaginary pairs, row by row.
pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("matrix rows must all have length dim".into()));
    }
    Ok(CMat::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// Inverse of [`from_pairs`].
pub fn to_pairs(a: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect()).collect()
}

/// Serializes a matrix as rows of `[re, im]` pairs.
pub fn serialize_pairs<S: serde::Serializer>(a: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&to_pairs(a), s)
}

pub fn serialize_pairs_vec<S: serde::Serializer>(v: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(to_pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0))))
    }

    fn sx() -> CMat {
        CMat::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0].map(|x| C64::new(x, 0.0)))
    }

    #[test]
    fn norms_of_small_examples() {
        assert_abs_diff_eq!(trace_norm(&identity(2)).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_norm(&diag(&[3.0, -4.0])).unwrap(), 7.0, epsilon = 1e-13);
        assert_abs_diff_eq!(max_norm(&diag(&[3.0, -4.0])).unwrap(), 4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(max_norm(&identity(3)).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(max_norm(&sx()).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn density_matrix_has_unit_trace_norm() {
        let psi = CVec::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let rho = projector(&psi) * C64::new(0.7, 0.0) + identity(2) * C64::new(0.15, 0.0);
        assert_abs_diff_eq!(trace_norm(&rho).unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn non_hermitian_goes_through_svd() {
        // [[0, 2], [0, 0]] has singular values {2, 0}
        let a = CMat::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0].map(|x| C64::new(x, 0.0)));
        assert_abs_diff_eq!(trace_norm(&a).unwrap(), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(max_norm(&a).unwrap(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = identity(2);
        a[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(trace_norm(&a), Err(Error::InvalidInput(_))));
        assert!(matches!(max_norm(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn herm_eig_orders_and_fixes_phase() {
        let (vals, vecs) = herm_eig(&diag(&[2.0, 1.0])).unwrap();
        assert_eq!(vals, vec![1.0, 2.0]);
        assert_abs_diff_eq!(vecs[(1, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vecs[(0, 1)].re, 1.0, epsilon = 1e-14);

        let sz = diag(&[0.5, -0.5]);
        let (vals, _) = herm_eig(&sz).unwrap();
        assert_abs_diff_eq!(vals[0], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let a = CMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0].map(|x| C64::new(x, 0.0)));
        assert!(matches!(herm_eig(&a), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn sign_operator_puts_zero_on_plus_side() {
        let o = sign_operator(&diag(&[0.0, -2.0, 3.0]));
        assert_abs_diff_eq!((o - diag(&[1.0, -1.0, 1.0])).norm(), 0.0, epsilon = 1e-13);
    }
}
