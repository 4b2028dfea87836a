//! Dense linear-algebra helpers built on nalgebra's SVD and symmetric eigensolver.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::Scalar;

/// Cutoff below which a singular value is treated as zero.
///
/// The larger of `rel_tol · σ_max` and `max(rows, cols) · ε · σ_max`, so that
/// single-precision scalars do not claim more rank than they can resolve.
pub fn rank_threshold<T: Scalar>(sigma_max: T, rows: usize, cols: usize, rel_tol: T) -> T {
    let floor = T::lit(rows.max(cols) as f64) * T::eps();
    sigma_max * rel_tol.max(floor)
}

/// SVD with a complete set of right singular vectors (`v_t` is `cols × cols`).
fn full_svd<T: Scalar>(a: &DMatrix<T>) -> SVD<T, nalgebra::Dyn, nalgebra::Dyn> {
    let (r, c) = a.shape();
    if r >= c {
        SVD::new(a.clone(), true, true)
    } else {
        let mut padded = DMatrix::zeros(c, c);
        padded.rows_mut(0, r).copy_from(a);
        SVD::new(padded, true, true)
    }
}

pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> DVector<T> {
    if a.is_empty() {
        return DVector::zeros(0);
    }
    SVD::new(a.clone(), false, false).singular_values
}

pub fn numerical_rank<T: Scalar>(a: &DMatrix<T>, rel_tol: T) -> usize {
    let sv = singular_values(a);
    if sv.is_empty() {
        return 0;
    }
    let smax = sv.max();
    if smax <= T::zero() {
        return 0;
    }
    let thr = rank_threshold(smax, a.nrows(), a.ncols(), rel_tol);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Orthonormal basis of `ker(a)` as the columns of a `cols × k` matrix.
pub fn kernel_basis<T: Scalar>(a: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let (r, c) = a.shape();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if r == 0 {
        return DMatrix::identity(c, c);
    }
    let svd = full_svd(a);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let thr = rank_threshold(smax, r, c, rel_tol);
    let null: Vec<usize> = (0..c)
        .filter(|&i| smax <= T::zero() || svd.singular_values[i] <= thr)
        .collect();
    let mut basis = DMatrix::zeros(c, null.len());
    for (j, &i) in null.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    basis
}

/// Orthonormal basis of the row space of `a` (columns of a `cols × rank` matrix).
pub fn row_space_basis<T: Scalar>(a: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, 0);
    }
    let svd = SVD::new(a.clone(), false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    if smax <= T::zero() {
        return DMatrix::zeros(c, 0);
    }
    let thr = rank_threshold(smax, r, c, rel_tol);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > thr)
        .collect();
    let mut basis = DMatrix::zeros(c, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    basis
}

/// Orthonormal basis of the column space of `a`.
pub fn column_space_basis<T: Scalar>(a: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    row_space_basis(&a.transpose(), rel_tol)
}

/// Moore–Penrose pseudoinverse with a relative singular-value cutoff.
pub fn pinv<T: Scalar>(a: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let thr = rank_threshold(smax, r, c, rel_tol);
    let mut out = DMatrix::zeros(c, r);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if smax > T::zero() && s > thr {
            out += v_t.row(i).transpose() * u.column(i).transpose() * (T::one() / s);
        }
    }
    out
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn min_norm_solve<T: Scalar>(a: &DMatrix<T>, b: &DVector<T>, rel_tol: T) -> DVector<T> {
    pinv(a, rel_tol) * b
}

pub fn symmetrize<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.transpose()) * T::lit(0.5)
}

/// Smallest and largest eigenvalue of the symmetric part of `a`.
pub fn eigen_extremes<T: Scalar>(a: &DMatrix<T>) -> (T, T) {
    if a.is_empty() {
        return (T::zero(), T::zero());
    }
    let ev = SymmetricEigen::new(symmetrize(a)).eigenvalues;
    (ev.min(), ev.max())
}

pub fn min_eigenvalue<T: Scalar>(a: &DMatrix<T>) -> T {
    eigen_extremes(a).0
}

pub fn max_eigenvalue<T: Scalar>(a: &DMatrix<T>) -> T {
    eigen_extremes(a).1
}

/// `I_count ⊗ block`.
pub fn block_diag_repeat<T: Scalar>(block: &DMatrix<T>, count: usize) -> DMatrix<T> {
    let (r, c) = block.shape();
    let mut out = DMatrix::zeros(r * count, c * count);
    for k in 0..count {
        out.view_mut((k * r, k * c), (r, c)).copy_from(block);
    }
    out
}

/// Vertical concatenation; all blocks must share a column count.
pub fn vstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.rows_mut(at, b.nrows()).copy_from(*b);
        at += b.nrows();
    }
    out
}

pub fn vcat<T: Scalar>(parts: &[&DVector<T>]) -> DVector<T> {
    let n: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = DVector::zeros(n);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(*p);
        at += p.len();
    }
    out
}

pub fn inf_norm<T: Scalar>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}
