//! Quadratic Lie algebras: a bracket, an invariant symmetric form and a
//! compatible involution, stored as dense coordinates in a fixed basis.
//!
//! The inner product used everywhere downstream is `<x, y> = -form(θx, y)`,
//! which is positive definite when `θ` is a Cartan involution.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs};

/// A subspace of some coordinate space, given by a column basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Checks linear independence: after normalizing columns the smallest
    /// singular value must exceed `1e-10`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() > 0 {
            let mut normalized = basis.clone();
            for mut c in normalized.column_iter_mut() {
                let nrm = c.norm();
                if nrm == 0.0 {
                    return Err(Error::InvalidAlgebra("zero vector in subspace basis".into()));
                }
                c /= nrm;
            }
            let sv = normalized.singular_values();
            let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            if basis.ncols() > basis.nrows() || smin <= 1e-10 {
                return Err(Error::InvalidAlgebra("subspace basis is linearly dependent".into()));
            }
        }
        Ok(Subspace { basis })
    }

    pub fn zero(ambient: usize) -> Self {
        Subspace { basis: DMatrix::zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { basis: DMatrix::identity(ambient, ambient) }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }
}

/// Residuals of every structural invariant of a [`QuadraticLieAlgebra`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub involution_square: f64,
    pub involution_automorphism: f64,
    pub form_symmetry: f64,
    pub form_invariance: f64,
    pub gram_symmetry: f64,
    /// Smallest eigenvalue of the Gram matrix relative to its largest absolute eigenvalue.
    pub gram_min_eigenvalue: f64,
    pub ad_adjoint: f64,
    pub tolerance: f64,
    pub ok: bool,
}

/// A finite-dimensional real Lie algebra with an ad-invariant symmetric form
/// and an involutive automorphism.
#[derive(Debug, Clone)]
pub struct QuadraticLieAlgebra {
    label: String,
    dim: usize,
    structure: Vec<f64>,
    form: DMatrix<f64>,
    involution: DMatrix<f64>,
    gram: DMatrix<f64>,
    gram_sqrt: Option<DMatrix<f64>>,
    gram_inv_sqrt: Option<DMatrix<f64>>,
    cartan: Option<Subspace>,
}

impl QuadraticLieAlgebra {
    /// Builds an algebra from fully populated structure constants
    /// `structure[(i*d + j)*d + k] = c[i][j][k]`. Only shapes are checked here;
    /// use [`validate_algebra`] for the algebraic invariants.
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        structure: Vec<f64>,
        form: DMatrix<f64>,
        involution: DMatrix<f64>,
    ) -> Result<Self> {
        if structure.len() != dim * dim * dim {
            return Err(Error::Dimension(format!(
                "structure tensor has {} entries, expected {}",
                structure.len(),
                dim * dim * dim
            )));
        }
        for (name, m) in [("form", &form), ("involution", &involution)] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Dimension(format!("{name} must be {dim}x{dim}")));
            }
        }
        let gram = -(involution.transpose() * &form);
        let (gram_sqrt, gram_inv_sqrt) = {
            let (vals, _) = linalg::sym_eigen(&gram);
            let sym_err = max_abs(&(&gram - gram.transpose()));
            let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if dim > 0 && vals[0] > 1e-12 * scale && sym_err <= 1e-10 * scale.max(1.0) {
                (Some(linalg::sym_apply(&gram, f64::sqrt)), Some(linalg::sym_apply(&gram, |x| 1.0 / x.sqrt())))
            } else if dim == 0 {
                (Some(DMatrix::zeros(0, 0)), Some(DMatrix::zeros(0, 0)))
            } else {
                (None, None)
            }
        };
        Ok(QuadraticLieAlgebra {
            label: label.into(),
            dim,
            structure,
            form,
            involution,
            gram,
            gram_sqrt,
            gram_inv_sqrt,
            cartan: None,
        })
    }

    /// Same as [`QuadraticLieAlgebra::new`] with the Killing form as invariant form.
    pub fn with_killing_form(
        label: impl Into<String>,
        dim: usize,
        structure: Vec<f64>,
        involution: DMatrix<f64>,
    ) -> Result<Self> {
        let form = killing_form(dim, &structure);
        Self::new(label, dim, structure, form, involution)
    }

    pub fn with_cartan(mut self, cartan: Subspace) -> Self {
        self.cartan = Some(cartan);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure(&self) -> &[f64] {
        &self.structure
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn involution(&self) -> &DMatrix<f64> {
        &self.involution
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Distinguished θ-invariant Cartan subalgebra, when the catalog knows one.
    pub fn cartan(&self) -> Option<&Subspace> {
        self.cartan.as_ref()
    }

    /// `G^{1/2}`; fails when the Gram matrix is not positive definite.
    pub fn gram_sqrt(&self) -> Result<&DMatrix<f64>> {
        self.gram_sqrt
            .as_ref()
            .ok_or_else(|| Error::InvalidAlgebra(format!("{}: Gram matrix is not positive definite", self.label)))
    }

    pub fn gram_inv_sqrt(&self) -> Result<&DMatrix<f64>> {
        self.gram_inv_sqrt
            .as_ref()
            .ok_or_else(|| Error::InvalidAlgebra(format!("{}: Gram matrix is not positive definite", self.label)))
    }

    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        let mut out = DVector::zeros(d);
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                let base = (i * d + j) * d;
                for k in 0..d {
                    out[k] += w * self.structure[base + k];
                }
            }
        }
        out
    }

    /// Matrix of `x ↦ [v, x]`.
    pub fn adjoint(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            if v[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let base = (i * d + j) * d;
                for k in 0..d {
                    m[(k, j)] += v[i] * self.structure[base + k];
                }
            }
        }
        m
    }

    pub fn theta(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.involution * x
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    pub fn norm_sq(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x)
    }

    /// Adjoint of an endomorphism with respect to the Gram inner product: `G⁻¹ Aᵀ G`.
    pub fn gram_adjoint(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let gi = self.gram_inv_sqrt()?;
        let ginv = gi * gi;
        Ok(ginv * a.transpose() * &self.gram)
    }

    /// Basis vector `b_i`.
    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim);
        v[i] = 1.0;
        v
    }

    /// Gram-orthonormal basis of the `-1` eigenspace of θ.
    pub fn p_basis(&self) -> Result<DMatrix<f64>> {
        self.eigenspace_of_theta(-1.0)
    }

    /// Gram-orthonormal basis of the `+1` eigenspace of θ.
    pub fn k_basis(&self) -> Result<DMatrix<f64>> {
        self.eigenspace_of_theta(1.0)
    }

    fn eigenspace_of_theta(&self, sign: f64) -> Result<DMatrix<f64>> {
        let s = self.gram_sqrt()?;
        let si = self.gram_inv_sqrt()?;
        // In Gram-orthonormal coordinates θ is a symmetric orthogonal involution.
        let t = s * &self.involution * si;
        let (vals, vecs) = linalg::sym_eigen(&t);
        let cols: Vec<DVector<f64>> = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| (v - sign).abs() < 0.5)
            .map(|(i, _)| si * vecs.column(i))
            .collect();
        Ok(linalg::columns(self.dim, &cols))
    }

    /// Gram-orthonormalizes the columns of `m` (dropping dependent directions).
    pub fn orthonormalize(&self, m: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
        let s = self.gram_sqrt()?;
        let si = self.gram_inv_sqrt()?;
        let q = linalg::range_basis(&(s * m), rel_tol);
        Ok(si * q)
    }

    /// Direct sum of two quadratic algebras (block-diagonal everything).
    pub fn direct_sum(&self, other: &QuadraticLieAlgebra) -> Result<QuadraticLieAlgebra> {
        let (d1, d2) = (self.dim, other.dim);
        let d = d1 + d2;
        let mut c = vec![0.0; d * d * d];
        for i in 0..d1 {
            for j in 0..d1 {
                for k in 0..d1 {
                    c[(i * d + j) * d + k] = self.c(i, j, k);
                }
            }
        }
        for i in 0..d2 {
            for j in 0..d2 {
                for k in 0..d2 {
                    c[((i + d1) * d + j + d1) * d + k + d1] = other.c(i, j, k);
                }
            }
        }
        let form = block_diag(&self.form, &other.form);
        let inv = block_diag(&self.involution, &other.involution);
        let mut alg = QuadraticLieAlgebra::new(format!("{}+{}", self.label, other.label), d, c, form, inv)?;
        if let (Some(a), Some(b)) = (&self.cartan, &other.cartan) {
            alg.cartan = Some(Subspace { basis: block_diag(&a.basis, &b.basis) });
        }
        Ok(alg)
    }
}

pub(crate) fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

/// `B[i][j] = tr(ad_{b_i} ∘ ad_{b_j})` for a fully populated structure tensor.
pub fn killing_form(dim: usize, structure: &[f64]) -> DMatrix<f64> {
    let d = dim;
    let c = |i: usize, j: usize, k: usize| structure[(i * d + j) * d + k];
    let mut b = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..d {
                for l in 0..d {
                    s += c(i, l, k) * c(j, k, l);
                }
            }
            b[(i, j)] = s;
            b[(j, i)] = s;
        }
    }
    b
}

/// Checks every invariant of the algebra and reports the residuals.
/// Residuals are relative to the natural scale of the data (max |c|, max |β|).
pub fn validate_algebra(alg: &QuadraticLieAlgebra, tol: f64) -> ValidationReport {
    let d = alg.dim;
    let cmax = alg.structure.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    let bmax = max_abs(&alg.form).max(f64::MIN_POSITIVE);

    let mut antisym = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                antisym = antisym.max((alg.c(i, j, k) + alg.c(j, i, k)).abs());
            }
        }
    }
    let antisymmetry = antisym / cmax;

    let basis: Vec<DVector<f64>> = (0..d).map(|i| alg.basis_vector(i)).collect();
    let mut jac = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let bij = alg.bracket(&basis[i], &basis[j]);
            for k in 0..d {
                let r = alg.bracket(&bij, &basis[k])
                    + alg.bracket(&alg.bracket(&basis[j], &basis[k]), &basis[i])
                    + alg.bracket(&alg.bracket(&basis[k], &basis[i]), &basis[j]);
                jac = jac.max(r.amax());
            }
        }
    }
    let jacobi = jac / (cmax * cmax).max(f64::MIN_POSITIVE);

    let theta = &alg.involution;
    let involution_square = if d == 0 { 0.0 } else { max_abs(&(theta * theta - DMatrix::identity(d, d))) };

    let mut aut = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let lhs = theta * alg.bracket(&basis[i], &basis[j]);
            let rhs = alg.bracket(&theta.column(i).into_owned(), &theta.column(j).into_owned());
            aut = aut.max((lhs - rhs).amax());
        }
    }
    let involution_automorphism = aut / cmax;

    let form_symmetry = if d == 0 { 0.0 } else { max_abs(&(&alg.form - alg.form.transpose())) / bmax };

    let mut inv = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let bij = alg.bracket(&basis[i], &basis[j]);
            for k in 0..d {
                let bik = alg.bracket(&basis[i], &basis[k]);
                let r = (bij.transpose() * &alg.form * &basis[k])[(0, 0)]
                    + (basis[j].transpose() * &alg.form * bik)[(0, 0)];
                inv = inv.max(r.abs());
            }
        }
    }
    let form_invariance = inv / (bmax * cmax);

    let gmax = max_abs(&alg.gram).max(f64::MIN_POSITIVE);
    let gram_symmetry = if d == 0 { 0.0 } else { max_abs(&(&alg.gram - alg.gram.transpose())) / gmax };
    let (gvals, _) = linalg::sym_eigen(&alg.gram);
    let gscale = gvals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let gram_min_eigenvalue = if d == 0 { 1.0 } else { gvals[0] / gscale };

    // <[v,x],y> = -<x,[θv,y]>  ⇔  G ad_v + ad_{θv}ᵀ G = 0
    let mut adj = 0.0f64;
    for (i, b) in basis.iter().enumerate() {
        let adv = alg.adjoint(b);
        let adtv = alg.adjoint(&theta.column(i).into_owned());
        let r = &alg.gram * adv + adtv.transpose() * &alg.gram;
        adj = adj.max(max_abs(&r));
    }
    let ad_adjoint = adj / (gmax * cmax);

    let ok = antisymmetry <= tol
        && jacobi <= tol
        && involution_square <= tol
        && involution_automorphism <= tol
        && form_symmetry <= tol
        && form_invariance <= tol
        && gram_symmetry <= tol
        && gram_min_eigenvalue > tol
        && ad_adjoint <= tol;

    ValidationReport {
        antisymmetry,
        jacobi,
        involution_square,
        involution_automorphism,
        form_symmetry,
        form_invariance,
        gram_symmetry,
        gram_min_eigenvalue,
        ad_adjoint,
        tolerance: tol,
        ok,
    }
}

/// Centralizer of `s` in `alg`: kernel of `v ↦ ([v, s_1], …, [v, s_m])`.
pub fn centralizer(alg: &QuadraticLieAlgebra, s: &Subspace, tol: f64) -> Subspace {
    let d = alg.dim;
    let m = s.dim();
    if m == 0 {
        return Subspace::full(d);
    }
    let mut stacked = DMatrix::zeros(d * m, d);
    for j in 0..m {
        let ad_s = alg.adjoint(&s.vector(j));
        stacked.view_mut((j * d, 0), (d, d)).copy_from(&(-ad_s));
    }
    let ns = linalg::null_space(&stacked, tol);
    Subspace { basis: ns.basis }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn killing_form_of_sl2() {
        let g = catalog::sl(2).unwrap();
        let b = g.form();
        // basis {H, E, F}
        assert_eq!(b[(0, 0)], 8.0);
        assert_eq!(b[(1, 2)], 4.0);
        assert_eq!(b[(1, 1)], 0.0);
        assert_eq!(b[(0, 1)], 0.0);
    }

    #[test]
    fn killing_form_of_su2_and_abelian() {
        let g = catalog::su2();
        assert!((g.form() + DMatrix::identity(3, 3) * 2.0).norm() == 0.0);
        let zero = killing_form(3, &vec![0.0; 27]);
        assert_eq!(zero, DMatrix::zeros(3, 3));
    }

    #[test]
    fn adjoint_examples() {
        let g = catalog::sl(2).unwrap();
        assert_eq!(g.adjoint(&DVector::zeros(3)), DMatrix::zeros(3, 3));
        let h = g.adjoint(&g.basis_vector(0));
        assert_eq!(h, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0, -2.0])));
        let s = catalog::su2();
        let a = s.adjoint(&s.basis_vector(0));
        // e2 -> e3, e3 -> -e2
        assert_eq!(a.column(1).into_owned(), s.basis_vector(2));
        assert_eq!(a.column(2).into_owned(), -s.basis_vector(1));
        assert_eq!(a.column(0).into_owned(), DVector::zeros(3));
    }

    #[test]
    fn sl2_validates() {
        let g = catalog::sl(2).unwrap();
        let r = validate_algebra(&g, 1e-10);
        assert!(r.ok, "{r:?}");
        assert!(r.jacobi < 1e-14 && r.antisymmetry < 1e-14 && r.form_invariance < 1e-14);
    }

    #[test]
    fn sl2_with_identity_involution_fails_positivity() {
        let g = catalog::sl(2).unwrap();
        let bad = QuadraticLieAlgebra::new("bad", 3, g.structure().to_vec(), g.form().clone(), DMatrix::identity(3, 3))
            .unwrap();
        let r = validate_algebra(&bad, 1e-10);
        assert!(!r.ok);
        assert!(r.gram_min_eigenvalue <= 0.0);
        // <H,H> = -B(H,H) = -8
        assert_eq!(bad.gram()[(0, 0)], -8.0);
        assert!(bad.gram_sqrt().is_err());
    }

    #[test]
    fn missing_antisymmetric_partner_is_reported() {
        let mut c = vec![0.0; 27];
        c[(0 * 3 + 1) * 3 + 2] = 1.0;
        let alg =
            QuadraticLieAlgebra::new("broken", 3, c, DMatrix::identity(3, 3) * -1.0, DMatrix::identity(3, 3)).unwrap();
        let r = validate_algebra(&alg, 1e-10);
        assert!(!r.ok);
        assert_eq!(r.antisymmetry, 1.0);
    }

    #[test]
    fn centralizer_examples() {
        let g = catalog::sl(2).unwrap();
        assert_eq!(centralizer(&g, &Subspace::full(3), 1e-8).dim(), 0);
        assert_eq!(centralizer(&g, &Subspace::zero(3), 1e-8).dim(), 3);
        let h = Subspace::new(DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
        let c = centralizer(&g, &h, 1e-8);
        assert_eq!(c.dim(), 1);
        let v = c.vector(0);
        assert!((v[0].abs() - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12 && v[2].abs() < 1e-12);
    }

    #[test]
    fn centralizer_commutes_with_subspace() {
        let g = catalog::sl(3).unwrap();
        let t = g.cartan().unwrap().clone();
        let c = centralizer(&g, &t, 1e-8);
        assert_eq!(c.dim(), 2);
        for i in 0..c.dim() {
            for j in 0..t.dim() {
                let ci = c.vector(i);
                let sj = t.vector(j);
                assert!(g.bracket(&ci, &sj).norm() <= 10.0 * 1e-8 * ci.norm() * sj.norm());
            }
        }
    }

    #[test]
    fn theta_eigenspaces_split_sl3() {
        let g = catalog::sl(3).unwrap();
        assert_eq!(g.p_basis().unwrap().ncols(), 5);
        assert_eq!(g.k_basis().unwrap().ncols(), 3);
    }
}
