use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::moment::moment_explicit;
use crate::pairs::Pair;
use crate::rational;

/// Largest common multiplier accepted before reconstruction is declared failed.
const MAX_SCALE: u64 = 1 << 40;
const RECONSTRUCT_TOL: f64 = 1e-9;
const RESIDUAL_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct RationalSpectrum {
    /// Common multiplier making `c·D/k` and `c·ad_u/k` integral.
    pub c: f64,
    pub k: f64,
    /// Eigenvalues of `D/k`, ascending.
    pub d_eigs: Vec<f64>,
    /// Eigenvalues of `ad_u/k`, ascending.
    pub adu_eigs: Vec<f64>,
    pub d_ints: Vec<i64>,
    pub adu_ints: Vec<i64>,
    pub residual: f64,
    #[serde(skip)]
    d_vecs: DMatrix<f64>,
    #[serde(skip)]
    adu_vecs: DMatrix<f64>,
}

/// Symmetric matrix `G^{1/2} ad_u G^{-1/2}`; eigenvectors `w` give `v = G^{-1/2} w`.
fn symmetric_ad(p: &Pair, u: &DVector<f64>) -> Result<DMatrix<f64>> {
    let g = p.codomain();
    let s = g.gram_sqrt()?;
    let si = g.gram_inv_sqrt()?;
    Ok(linalg::symmetrize(&(s * g.adjoint(u) * si)))
}

pub fn rational_spectrum(p: &Pair, max_den: u64) -> Result<RationalSpectrum> {
    let x = p.normalized()?;
    let mv = moment_explicit(&x)?;
    let k = mv.k;
    let (d_raw, d_vecs) = linalg::sym_eigen(&mv.d);
    let (a_raw, w) = linalg::sym_eigen(&symmetric_ad(&x, &mv.u)?);
    let adu_vecs = x.codomain().gram_inv_sqrt()? * w;
    let d_eigs: Vec<f64> = d_raw.iter().map(|e| e / k).collect();
    let adu_eigs: Vec<f64> = a_raw.iter().map(|e| e / k).collect();

    let mut c: u64 = 1;
    for &e in d_eigs.iter().chain(&adu_eigs) {
        let (_, q) = rational::reconstruct(e, max_den, RECONSTRUCT_TOL)
            .ok_or(Error::Reconstruction { residual: f64::INFINITY, max_den })?;
        c = rational::lcm(c, q)
            .filter(|&c| c <= MAX_SCALE)
            .ok_or(Error::Reconstruction { residual: f64::INFINITY, max_den })?;
    }
    let cf = c as f64;
    let round = |v: &[f64]| -> Vec<i64> { v.iter().map(|e| (cf * e).round() as i64).collect() };
    let residual = d_eigs.iter().chain(&adu_eigs).map(|e| (cf * e - (cf * e).round()).abs()).fold(0.0, f64::max);
    if residual > RESIDUAL_LIMIT {
        return Err(Error::Reconstruction { residual, max_den });
    }
    Ok(RationalSpectrum {
        c: cf,
        k,
        d_ints: round(&d_eigs),
        adu_ints: round(&adu_eigs),
        d_eigs,
        adu_eigs,
        residual,
        d_vecs,
        adu_vecs,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Block {
    pub weight: i64,
    /// Basis vectors, one per entry.
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Gradation {
    pub c: f64,
    pub denominators_bound: u64,
    pub h_weights: Vec<i64>,
    pub g_weights: Vec<i64>,
    pub h_blocks: Vec<Block>,
    pub g_blocks: Vec<Block>,
    pub h_bracket_residual: f64,
    pub g_bracket_residual: f64,
    pub phi_residual: f64,
    pub compat_residual: f64,
    pub spectrum_residual: f64,
}

fn blocks(weights: &[i64], vecs: &DMatrix<f64>) -> Vec<(i64, DMatrix<f64>)> {
    let mut ws: Vec<i64> = weights.to_vec();
    ws.sort_unstable();
    ws.dedup();
    ws.into_iter()
        .map(|w| {
            let cols: Vec<DVector<f64>> =
                weights.iter().enumerate().filter(|(_, &x)| x == w).map(|(i, _)| vecs.column(i).into_owned()).collect();
            (w, linalg::columns(vecs.nrows(), &cols))
        })
        .collect()
}

fn to_blocks(b: &[(i64, DMatrix<f64>)]) -> Vec<Block> {
    b.iter()
        .map(|(w, m)| Block { weight: *w, basis: m.column_iter().map(|c| c.iter().copied().collect()).collect() })
        .collect()
}

/// Component of `v` outside the block of weight `w`, with `gram` as metric.
fn off_block(blocks: &[(i64, DMatrix<f64>)], w: i64, v: &DVector<f64>, gram: &DMatrix<f64>) -> f64 {
    let rest = match blocks.iter().find(|(x, _)| *x == w) {
        Some((_, b)) => v - b * (b.transpose() * gram * v),
        None => v.clone(),
    };
    (rest.transpose() * gram * &rest)[(0, 0)].max(0.0).sqrt()
}

/// Eigenspace gradations of `ℝⁿ` by `c·D/k` and of `g` by `c·ad_u/k`, with
/// the bracket and `φ` compatibility residuals relative to `‖(μ,φ)‖ = 1`.
pub fn gradation(p: &Pair, max_den: u64) -> Result<Gradation> {
    let rs = rational_spectrum(p, max_den)?;
    let x = p.normalized()?;
    let g = x.codomain();
    let n = x.n();
    let hb = blocks(&rs.d_ints, &rs.d_vecs);
    let gb = blocks(&rs.adu_ints, &rs.adu_vecs);
    let id = DMatrix::identity(n, n);
    let gram = g.gram();

    let mut h_res: f64 = 0.0;
    for (a, ba) in &hb {
        for (b, bb) in &hb {
            for xa in ba.column_iter() {
                for yb in bb.column_iter() {
                    let z = x.bracket(&xa.into_owned(), &yb.into_owned());
                    h_res = h_res.max(off_block(&hb, a + b, &z, &id));
                }
            }
        }
    }
    let mut g_res: f64 = 0.0;
    let gn = g.structure().iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
    for (a, ba) in &gb {
        for (b, bb) in &gb {
            for xa in ba.column_iter() {
                for yb in bb.column_iter() {
                    let z = g.bracket(&xa.into_owned(), &yb.into_owned());
                    g_res = g_res.max(off_block(&gb, a + b, &z, gram) / gn);
                }
            }
        }
    }
    let mut phi_res: f64 = 0.0;
    for (a, ba) in &hb {
        for xa in ba.column_iter() {
            let z = x.phi() * xa;
            phi_res = phi_res.max(off_block(&gb, *a, &z, gram));
        }
    }
    Ok(Gradation {
        c: rs.c,
        denominators_bound: max_den,
        h_weights: rs.d_ints.clone(),
        g_weights: rs.adu_ints.clone(),
        h_blocks: to_blocks(&hb),
        g_blocks: to_blocks(&gb),
        h_bracket_residual: h_res,
        g_bracket_residual: g_res,
        phi_residual: phi_res,
        compat_residual: h_res.max(g_res).max(phi_res),
        spectrum_residual: rs.residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptedBasis {
    /// Orthonormal basis vectors, one per entry.
    pub basis: Vec<Vec<f64>>,
    pub d_eigs: Vec<f64>,
    pub phi_eigs: Vec<f64>,
    pub commutator: f64,
}

impl AdaptedBasis {
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.basis.len();
        DMatrix::from_fn(n, n, |i, j| self.basis[j][i])
    }
}

const COMMUTATOR_TOL: f64 = 1e-8;

/// Joint orthonormal eigenbasis of `D` and `φ*φ`, ordered by `D`-eigenvalue,
/// then `φ*φ`-eigenvalue, then index.
pub fn adapted_basis(p: &Pair) -> Result<AdaptedBasis> {
    let x = p.normalized()?;
    let mv = moment_explicit(&x)?;
    let f = x.phi_star_phi();
    let comm = (&mv.d * &f - &f * &mv.d).norm();
    if comm > COMMUTATOR_TOL {
        return Err(Error::NotCritical { residual: comm, tolerance: COMMUTATOR_TOL });
    }
    let n = x.n();
    let (de, dv) = linalg::sym_eigen(&mv.d);
    let gap = 1e-7 * mv.d.norm().max(mv.k);
    let mut entries: Vec<(f64, f64, usize, DVector<f64>)> = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && de[j] - de[j - 1] <= gap {
            j += 1;
        }
        let q = dv.columns(i, j - i).into_owned();
        let (fe, fv) = linalg::sym_eigen(&linalg::symmetrize(&(q.transpose() * &f * &q)));
        let mean = de[i..j].iter().sum::<f64>() / (j - i) as f64;
        for (l, &lam) in fe.iter().enumerate() {
            let v = &q * fv.column(l);
            entries.push((mean, lam, i + l, v));
        }
        i = j;
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(AdaptedBasis {
        basis: entries.iter().map(|e| e.3.iter().copied().collect()).collect(),
        d_eigs: entries.iter().map(|e| e.0).collect(),
        phi_eigs: entries.iter().map(|e| e.1).collect(),
        commutator: comm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::random::{random_pair, RandomMode};
    use std::sync::Arc;

    #[test]
    fn heisenberg_weights() {
        let p = catalog::pair("heisenberg-sl3").unwrap();
        let rs = rational_spectrum(&p, 100).unwrap();
        assert_eq!(rs.c, 9.0);
        assert_eq!(rs.d_ints, vec![2, 2, 4]);
        assert_eq!(rs.adu_ints, vec![-4, -2, -2, 0, 0, 2, 2, 4]);
        assert!(rs.residual <= 1e-8);
    }

    #[test]
    fn minimal_pair_has_trivial_spectrum() {
        let p = catalog::pair("cartan-line-sl2").unwrap();
        let rs = rational_spectrum(&p, 100).unwrap();
        assert_eq!(rs.c, 1.0);
        assert!(rs.d_ints.iter().chain(&rs.adu_ints).all(|&x| x == 0));
        assert_eq!(rs.residual, 0.0);
        let gr = gradation(&p, 100).unwrap();
        assert_eq!(gr.h_blocks.len(), 1);
        assert!(gr.compat_residual <= 1e-12);
    }

    #[test]
    fn random_non_critical_pair_fails() {
        let g = Arc::new(catalog::sl(3).unwrap());
        let base = catalog::pair("heisenberg-sl3").unwrap();
        let p = random_pair(RandomMode::OrbitPerturb, g, 3, 4, Some(&base)).unwrap();
        assert!(matches!(rational_spectrum(&p, 100), Err(Error::Reconstruction { .. })));
    }

    #[test]
    fn heisenberg_gradation_is_compatible() {
        let p = catalog::pair("heisenberg-sl3").unwrap();
        let gr = gradation(&p, 100).unwrap();
        assert!(gr.compat_residual <= 1e-10, "{gr:?}");
        let hw: Vec<i64> = gr.h_blocks.iter().map(|b| b.weight).collect();
        assert_eq!(hw, vec![2, 4]);
        assert_eq!(gr.h_blocks[0].basis.len(), 2);
        let gw: Vec<(i64, usize)> = gr.g_blocks.iter().map(|b| (b.weight, b.basis.len())).collect();
        assert_eq!(gw, vec![(-4, 1), (-2, 2), (0, 2), (2, 2), (4, 1)]);
    }

    #[test]
    fn borel_gradation() {
        for name in ["borel-sl2", "borel-sl3"] {
            let p = catalog::pair(name).unwrap();
            let gr = gradation(&p, 1000).unwrap();
            assert!(gr.compat_residual <= 1e-9, "{name}: {gr:?}");
            assert!(gr.h_weights.iter().all(|&w| w >= 0));
        }
    }

    #[test]
    fn adapted_basis_is_orthonormal_and_ordered() {
        let p = catalog::pair("heisenberg-sl3").unwrap();
        let ab = adapted_basis(&p).unwrap();
        let q = ab.matrix();
        assert!((q.transpose() * &q - DMatrix::identity(3, 3)).norm() < 1e-12);
        assert!(ab.d_eigs.windows(2).all(|w| w[0] <= w[1]));
        let x = p.normalized().unwrap();
        let d = moment_explicit(&x).unwrap().d;
        let f = x.phi_star_phi();
        let dd = q.transpose() * d * &q;
        let ff = q.transpose() * f * &q;
        assert!((dd.clone() - DMatrix::from_diagonal(&dd.diagonal())).norm() < 1e-12);
        assert!((ff.clone() - DMatrix::from_diagonal(&ff.diagonal())).norm() < 1e-12);
    }

    #[test]
    fn adapted_basis_rejects_non_critical() {
        let g = Arc::new(catalog::sl(3).unwrap());
        let base = catalog::pair("heisenberg-sl3").unwrap();
        let p = random_pair(RandomMode::OrbitPerturb, g, 3, 4, Some(&base)).unwrap();
        assert!(matches!(adapted_basis(&p), Err(Error::NotCritical { .. })));
    }
}
