use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{validate_algebra, QuadraticLieAlgebra};
use crate::error::{Error, Result};
use crate::linalg;
use crate::moment::moment_explicit;
use crate::pairs::{derivation_space, from_gc_coords, gc_coords, Pair};

use super::criticality::{criticality_test, DER_TOL};
use super::levi::kernel_and_image;

/// `r = der(μ,φ) ∩ θ̃ der(μ,φ)` with its restricted quadratic structure.
#[derive(Debug, Clone)]
pub struct ThetaInvariantDerivations {
    pub n: usize,
    /// Orthonormal basis of θ̃-eigenvectors in coordinates `(vec A, G^{1/2}v)`.
    pub basis: DMatrix<f64>,
    /// θ̃-eigenvalue of each basis element.
    pub signs: Vec<f64>,
    pub der_dim: usize,
    /// `max ‖[b, (D,u)]‖ / ‖(D,u)‖` over the basis.
    pub commutator_residual: f64,
    pub algebra: Option<Arc<QuadraticLieAlgebra>>,
    codomain: Arc<QuadraticLieAlgebra>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaInvariantSummary {
    pub dim: usize,
    pub der_dim: usize,
    pub signs: Vec<f64>,
    pub commutator_residual: f64,
    pub algebra_valid: bool,
    pub basis: Vec<Vec<f64>>,
}

impl ThetaInvariantDerivations {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// The element of `gc_n(g)` with `r`-coordinates `c`.
    pub fn element(&self, c: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let (a, w) = from_gc_coords(self.n, &(&self.basis * c));
        Ok((a, self.codomain.gram_inv_sqrt()? * w))
    }

    /// `r`-coordinates of an element of `gc_n(g)` assumed to lie in `r`.
    pub fn coordinates(&self, a: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.basis.transpose() * gc_coords(a, &(self.codomain.gram_sqrt()? * v)))
    }

    pub fn summary(&self) -> ThetaInvariantSummary {
        ThetaInvariantSummary {
            dim: self.dim(),
            der_dim: self.der_dim,
            signs: self.signs.clone(),
            commutator_residual: self.commutator_residual,
            algebra_valid: self.algebra.as_ref().is_none_or(|a| validate_algebra(a, 1e-8).ok),
            basis: super::levi::column_vecs(&self.basis),
        }
    }
}

/// `θ̃` in orthonormal `gc_n(g)` coordinates.
fn theta_matrix(n: usize, g: &QuadraticLieAlgebra) -> Result<DMatrix<f64>> {
    let d = g.dim();
    let mut t = DMatrix::zeros(n * n + d, n * n + d);
    for a in 0..n {
        for b in 0..n {
            t[(b * n + a, a * n + b)] = -1.0;
        }
    }
    let th = g.gram_sqrt()? * g.involution() * g.gram_inv_sqrt()?;
    t.view_mut((n * n, n * n), (d, d)).copy_from(&th);
    Ok(t)
}

/// Bracket of `gc_n(g)` in orthonormal coordinates.
fn gc_bracket(n: usize, g: &QuadraticLieAlgebra, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let si = g.gram_inv_sqrt()?;
    let s = g.gram_sqrt()?;
    let (a, v) = from_gc_coords(n, x);
    let (b, w) = from_gc_coords(n, y);
    let c = &a * &b - &b * &a;
    let z = g.bracket(&(si * v), &(si * w));
    Ok(gc_coords(&c, &(s * z)))
}

pub fn theta_invariant_derivations(p: &Pair) -> Result<ThetaInvariantDerivations> {
    let x = p.normalized()?;
    let n = x.n();
    let g = x.codomain().clone();
    let ds = derivation_space(&x, DER_TOL)?;
    let q = ds.orthonormal_matrix(&g)?;
    let t = theta_matrix(n, &g)?;
    let dim_total = n * n + g.dim();
    let r = if q.ncols() == 0 {
        DMatrix::zeros(dim_total, 0)
    } else {
        let off = (DMatrix::identity(dim_total, dim_total) - &q * q.transpose()) * &t * &q;
        // columns of `off` are unit-scale, so the cutoff is absolute
        let smax = off.singular_values().max();
        let ns = linalg::null_space(&off, if smax > 0.0 { DER_TOL / smax } else { 1.0 });
        &q * ns.basis
    };
    let (basis, signs) = if r.ncols() == 0 {
        (r, vec![])
    } else {
        let (e, v) = linalg::sym_eigen(&linalg::symmetrize(&(r.transpose() * &t * &r)));
        (&r * v, e.iter().map(|s| s.signum()).collect::<Vec<f64>>())
    };

    let mv = moment_explicit(&x)?;
    let du = gc_coords(&mv.d, &(g.gram_sqrt()? * &mv.u));
    let dn = du.norm().max(mv.k);
    let mut commutator_residual: f64 = 0.0;
    for b in basis.column_iter() {
        let c = gc_bracket(n, &g, &b.into_owned(), &du)?;
        commutator_residual = commutator_residual.max(c.norm() / dn);
    }

    let m = basis.ncols();
    let algebra = if m == 0 {
        None
    } else {
        let cols: Vec<DVector<f64>> = basis.column_iter().map(|c| c.into_owned()).collect();
        let mut c = vec![0.0; m * m * m];
        for i in 0..m {
            for j in 0..m {
                let z = basis.transpose() * gc_bracket(n, &g, &cols[i], &cols[j])?;
                for k in 0..m {
                    // basis is orthonormal, so roundoff is absolute
                    c[(i * m + j) * m + k] = if z[k].abs() <= 1e-12 { 0.0 } else { z[k] };
                }
            }
        }
        let s = DVector::from_vec(signs.clone());
        let alg = QuadraticLieAlgebra::new(
            format!("r({})", g.label()),
            m,
            c,
            DMatrix::from_diagonal(&(-&s)),
            DMatrix::from_diagonal(&s),
        )?;
        Some(Arc::new(alg))
    };
    Ok(ThetaInvariantDerivations { n, basis, signs, der_dim: ds.dim(), commutator_residual, algebra, codomain: g })
}

/// The abelian pair on `ℝ` sending `e_1` to the unit vector along `(D,u)` in `r`.
pub fn toral_line(base: &Pair, r: &ThetaInvariantDerivations) -> Result<Pair> {
    let alg = r.algebra.clone().ok_or_else(|| Error::Precondition("r is zero-dimensional".into()))?;
    let x = base.normalized()?;
    let mv = moment_explicit(&x)?;
    let c = r.coordinates(&mv.d, &mv.u)?;
    let nrm = c.norm();
    if nrm == 0.0 {
        return Err(Error::Precondition("(D,u) vanishes; base is minimal".into()));
    }
    Pair::new(alg, 1, vec![0.0], DMatrix::from_column_slice(c.len(), 1, (c / nrm).as_slice()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionCheck {
    pub scale: f64,
    pub k_base: f64,
    pub k_ext: f64,
    pub jacobi_residual: f64,
    pub hom_residual: f64,
    pub criticality_residual: f64,
    pub d_identity: f64,
    pub u_identity: f64,
    pub r_valid: bool,
}

/// `(ν,ψ) ⋉ (μ,φ)` on `ℝ^{m+n}` (extension coordinates first), with the
/// extension rescaled so that both `k` values agree.
pub fn semidirect_extend(base: &Pair, ext: &Pair, r: &ThetaInvariantDerivations) -> Result<(Pair, ExtensionCheck)> {
    let x = base.normalized()?;
    let n = x.n();
    let bm = moment_explicit(&x)?;
    let (ker, _) = kernel_and_image(&x)?;
    if ker.ncols() != 0 {
        return Err(Error::Precondition(format!("base has {}-dimensional ker D; it must be nilpotent", ker.ncols())));
    }
    let crit = criticality_test(&x, 1e-6)?;
    if !crit.is_critical {
        return Err(Error::NotCritical { residual: crit.projection_residual, tolerance: 1e-6 });
    }
    let m = ext.n();
    let g = x.codomain().clone();
    if m == 0 {
        let check = ExtensionCheck {
            scale: 1.0,
            k_base: bm.k,
            k_ext: bm.k,
            jacobi_residual: 0.0,
            hom_residual: 0.0,
            criticality_residual: crit.projection_residual,
            d_identity: 0.0,
            u_identity: 0.0,
            r_valid: true,
        };
        return Ok((x, check));
    }
    let ralg = r.algebra.as_ref().ok_or_else(|| Error::InvalidPair("r is zero-dimensional".into()))?;
    let ec = ext.codomain();
    if ec.dim() != ralg.dim() || ec.structure().iter().zip(ralg.structure()).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::InvalidPair("extension codomain is not the r algebra of the base".into()));
    }
    if bm.k <= 0.0 {
        return Err(Error::Precondition("k of the base vanishes".into()));
    }
    let r_valid = validate_algebra(ralg, 1e-8).ok;
    let k_ext0 = moment_explicit(ext)?.k;
    let t = (bm.k / k_ext0).sqrt();
    let e = ext.scaled(t);
    let em = moment_explicit(&e)?;

    let dg = g.dim();
    let elems: Vec<(DMatrix<f64>, DVector<f64>)> =
        (0..m).map(|i| r.element(&e.phi().column(i).into_owned())).collect::<Result<_>>()?;
    let total = m + n;
    let mut mu = vec![0.0; total * total * total];
    let idx = |i: usize, j: usize, k: usize| (i * total + j) * total + k;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                mu[idx(i, j, k)] = e.mu_at(i, j, k);
            }
        }
        for b in 0..n {
            for c in 0..n {
                let v = elems[i].0[(c, b)];
                mu[idx(i, m + b, m + c)] = v;
                mu[idx(m + b, i, m + c)] = -v;
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                mu[idx(m + a, m + b, m + c)] = x.mu_at(a, b, c);
            }
        }
    }
    let mut phi = DMatrix::zeros(dg, total);
    for (i, (_, v)) in elems.iter().enumerate() {
        phi.set_column(i, v);
    }
    phi.view_mut((0, m), (dg, n)).copy_from(x.phi());
    let product = Pair::new(g.clone(), total, mu, phi)?;

    let (jac, hom) = product.residuals();
    let pc = criticality_test(&product, 1e-6)?;
    let pm = moment_explicit(&product)?;
    let (ua, uv) = r.element(&em.u)?;
    let mut expect_d = DMatrix::zeros(total, total);
    expect_d.view_mut((0, 0), (m, m)).copy_from(&em.d);
    expect_d.view_mut((m, m), (n, n)).copy_from(&(&ua + &bm.d));
    let scale = pm.d.norm().max(pm.k);
    let d_identity = (&pm.d - expect_d).norm() / scale;
    let u_identity = g.norm_sq(&(&pm.u - (&uv + &bm.u))).max(0.0).sqrt() / scale;
    let check = ExtensionCheck {
        scale: t,
        k_base: bm.k,
        k_ext: em.k,
        jacobi_residual: jac,
        hom_residual: hom,
        criticality_residual: pc.projection_residual,
        d_identity,
        u_identity,
        r_valid,
    };
    Ok((product, check))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::linalg::principal_cosines;
    use crate::structure::{levi_decompose, reductive_part_pair, restrict_nilradical};

    #[test]
    fn minimal_pair_r_is_all_of_der() {
        let p = catalog::pair("identity-su2").unwrap();
        let r = theta_invariant_derivations(&p).unwrap();
        assert_eq!(r.dim(), r.der_dim);
        assert!(r.commutator_residual <= 1e-12);
        let p = catalog::pair("cartan-line-sl2").unwrap();
        let r = theta_invariant_derivations(&p).unwrap();
        assert_eq!(r.dim(), r.der_dim);
        assert_eq!(r.dim(), 1);
    }

    #[test]
    fn heisenberg_r() {
        let p = catalog::pair("heisenberg-sl3").unwrap();
        let r = theta_invariant_derivations(&p).unwrap();
        assert!(r.commutator_residual <= 1e-8, "{}", r.commutator_residual);
        assert!(r.dim() >= 1 && r.dim() <= r.der_dim);
        let v = validate_algebra(r.algebra.as_ref().unwrap(), 1e-8);
        assert!(v.ok, "{v:?} {:?}", r.signs);
    }

    #[test]
    fn heisenberg_toral_extension() {
        let base = catalog::pair("heisenberg-sl3").unwrap();
        let r = theta_invariant_derivations(&base).unwrap();
        let ext = toral_line(&base, &r).unwrap().scaled(3.7);
        let (prod, check) = semidirect_extend(&base, &ext, &r).unwrap();
        assert_eq!(prod.n(), 4);
        assert!((check.k_ext - check.k_base).abs() <= 1e-10 * check.k_base);
        assert!(check.jacobi_residual <= 1e-9 && check.hom_residual <= 1e-9, "{check:?}");
        assert!(check.criticality_residual <= 1e-6, "{check:?}");
        assert!(check.d_identity <= 1e-7 && check.u_identity <= 1e-7, "{check:?}");

        let l = levi_decompose(&prod, 1e-8).unwrap();
        assert_eq!((l.m_part.dim(), l.a_part.dim(), l.n_part.dim()), (0, 1, 3));
        let (_, nc) = restrict_nilradical(&prod).unwrap();
        assert!(nc.u_difference <= 1e-7 && nc.d_difference <= 1e-7, "{nc:?}");
        let base_coords = DMatrix::from_fn(4, 3, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
        let cos = principal_cosines(l.n_part.basis(), &base_coords);
        assert!(cos.iter().all(|c| (1.0 - c).abs() <= 1e-6));

        let (red, rc) = reductive_part_pair(&prod).unwrap();
        assert_eq!(red.n(), 1);
        assert_eq!(red.codomain().dim(), 9 + 8);
        assert!((rc.energy - 1.0).abs() <= 1e-7, "{rc:?}");
    }

    #[test]
    fn empty_extension_returns_base() {
        let base = catalog::pair("heisenberg-sl3").unwrap();
        let r = theta_invariant_derivations(&base).unwrap();
        let empty = Pair::zero(r.algebra.clone().unwrap(), 0);
        let (prod, _) = semidirect_extend(&base, &empty, &r).unwrap();
        assert_eq!(prod.n(), 3);
        assert_eq!(prod.mu(), base.normalized().unwrap().mu());
    }

    #[test]
    fn codomain_mismatch_is_rejected() {
        let base = catalog::pair("heisenberg-sl3").unwrap();
        let r = theta_invariant_derivations(&base).unwrap();
        let other = catalog::pair("cartan-line-sl2").unwrap();
        assert!(semidirect_extend(&base, &other, &r).is_err());
        let borel = catalog::pair("borel-sl3").unwrap();
        let rb = theta_invariant_derivations(&borel).unwrap();
        assert!(semidirect_extend(&borel, &toral_line(&base, &r).unwrap(), &rb).is_err());
    }
}
