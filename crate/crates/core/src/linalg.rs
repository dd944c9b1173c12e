//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on `DMatrix<f64>`; the matrices in this crate are at
//! most a few hundred rows, so no effort is spent on blocking or sparsity.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

/// Numerical kernel of a linear map together with its full singular spectrum.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// Orthonormal (dot product) basis of the kernel, one column per vector.
    pub basis: DMatrix<f64>,
    /// All singular values, sorted in decreasing order (length = number of columns of the map).
    pub singular_values: Vec<f64>,
    /// Absolute cutoff that was applied.
    pub cutoff: f64,
}

/// Kernel of `m`: right singular vectors whose singular value is below
/// `rel_tol * sigma_max`. A map with `sigma_max == 0` has the whole domain as kernel.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> NullSpace {
    let cols = m.ncols();
    if cols == 0 {
        return NullSpace { basis: DMatrix::zeros(0, 0), singular_values: vec![], cutoff: 0.0 };
    }
    // The thin SVD only returns min(rows, cols) right vectors; pad so all of them appear.
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * smax;
    let mut kernel: Vec<DVector<f64>> = Vec::new();
    for (i, &s) in sv.iter().enumerate() {
        if smax == 0.0 || s < cutoff {
            kernel.push(v_t.row(i).transpose());
        }
    }
    let mut singular_values: Vec<f64> = sv.iter().cloned().collect();
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    NullSpace { basis: columns(cols, &kernel), singular_values, cutoff }
}

/// Orthonormal basis (dot product) of the column space of `m`, dropping directions
/// with singular value below `rel_tol * sigma_max`.
pub fn range_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("requested U");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let keep: Vec<DVector<f64>> =
        sv.iter().enumerate().filter(|(_, &s)| s > rel_tol * smax).map(|(i, _)| u.column(i).into_owned()).collect();
    columns(rows, &keep)
}

/// Stack vectors as the columns of a `rows × k` matrix.
pub fn columns(rows: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Eigen-decomposition of the symmetric part of `m`, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], DMatrix::zeros(0, 0));
    }
    let s = symmetrize(m);
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `f` applied to a symmetric matrix through its spectral decomposition.
pub fn sym_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let n = vals.len();
    let mut d = DMatrix::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        d[(i, i)] = f(v);
    }
    &vecs * d * vecs.transpose()
}

/// Matrix exponential of a general square matrix.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    m.exp()
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Flatten a matrix row-major.
pub fn flatten_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// Cosines of the principal angles between the column spaces of two
/// dot-orthonormal bases, sorted in decreasing order.
pub fn principal_cosines(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> Vec<f64> {
    if q1.ncols() == 0 || q2.ncols() == 0 {
        return vec![];
    }
    let c = q1.transpose() * q2;
    let svd = SVD::new(c, false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().map(|x| x.min(1.0)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Orthogonal projector onto the column space of a dot-orthonormal basis.
pub fn projector(q: &DMatrix<f64>) -> DMatrix<f64> {
    q * q.transpose()
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal) columns of `q`
/// inside the (orthonormal) columns of `ambient`.
pub fn complement_in(ambient: &DMatrix<f64>, q: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = ambient.nrows();
    if ambient.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let residual = ambient - projector(q) * ambient;
    let basis = range_basis(&residual, rel_tol);
    if basis.ncols() + q.ncols() > ambient.ncols() {
        // numerical slack: keep only the expected number of directions
        let keep = ambient.ncols().saturating_sub(q.ncols());
        return basis.columns(0, keep).into_owned();
    }
    basis
}
