use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::Subspace;
use crate::catalog;
use crate::error::{Error, Result};
use crate::linalg;
use crate::moment::moment_explicit;
use crate::pairs::Pair;

use super::criticality::criticality_test;

/// Eigenvalues of `D` below this multiple of `k` count as kernel.
const KERNEL_REL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LeviDecomposition {
    pub m_part: Subspace,
    pub a_part: Subspace,
    pub n_part: Subspace,
    pub orthogonality: f64,
    pub subalgebra_residual: f64,
    pub ideal_residual: f64,
    pub center_residual: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LeviSummary {
    pub m_dim: usize,
    pub a_dim: usize,
    pub n_dim: usize,
    pub m_basis: Vec<Vec<f64>>,
    pub a_basis: Vec<Vec<f64>>,
    pub n_basis: Vec<Vec<f64>>,
    pub orthogonality: f64,
    pub subalgebra_residual: f64,
    pub ideal_residual: f64,
    pub center_residual: f64,
    pub tolerance: f64,
    pub ok: bool,
}

pub(crate) fn column_vecs(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

impl LeviDecomposition {
    pub fn summary(&self) -> LeviSummary {
        LeviSummary {
            m_dim: self.m_part.dim(),
            a_dim: self.a_part.dim(),
            n_dim: self.n_part.dim(),
            m_basis: column_vecs(self.m_part.basis()),
            a_basis: column_vecs(self.a_part.basis()),
            n_basis: column_vecs(self.n_part.basis()),
            orthogonality: self.orthogonality,
            subalgebra_residual: self.subalgebra_residual,
            ideal_residual: self.ideal_residual,
            center_residual: self.center_residual,
            tolerance: self.tolerance,
            ok: self.ok,
        }
    }
}

/// Orthonormal bases of `ker D` and `im D` at the unit representative.
pub(crate) fn kernel_and_image(x: &Pair) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mv = moment_explicit(x)?;
    let (e, v) = linalg::sym_eigen(&mv.d);
    let cut = KERNEL_REL * mv.k;
    let pick = |keep: &dyn Fn(f64) -> bool| {
        let cols: Vec<DVector<f64>> =
            e.iter().enumerate().filter(|(_, &l)| keep(l)).map(|(i, _)| v.column(i).into_owned()).collect();
        linalg::columns(x.n(), &cols)
    };
    Ok((pick(&|l: f64| l.abs() <= cut), pick(&|l: f64| l.abs() > cut)))
}

/// Largest component of `μ(X,Y)` outside the span of `target` over `X ∈ left`, `Y ∈ right`.
fn bracket_leak(x: &Pair, left: &DMatrix<f64>, right: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for a in left.column_iter() {
        for b in right.column_iter() {
            let z = x.bracket(&a.into_owned(), &b.into_owned());
            let off = &z - target * (target.transpose() * &z);
            worst = worst.max(off.norm());
        }
    }
    worst
}

/// `ℝⁿ = m ⊕ a ⊕ n` with `n = im D`, `m` the derived algebra of `ker D` and
/// `a` its orthogonal complement in `ker D`.
pub fn levi_decompose(p: &Pair, tol: f64) -> Result<LeviDecomposition> {
    let x = p.normalized()?;
    let n = x.n();
    let (ker, img) = kernel_and_image(&x)?;
    let r = ker.ncols();
    let mut brackets = Vec::new();
    for i in 0..r {
        for j in i + 1..r {
            let z = x.bracket(&ker.column(i).into_owned(), &ker.column(j).into_owned());
            brackets.push(ker.transpose() * z);
        }
    }
    let (m, a) = if brackets.is_empty() {
        (DMatrix::zeros(n, 0), ker.clone())
    } else {
        let b = linalg::columns(r, &brackets);
        let svd = b.clone().svd(true, false);
        let smax = svd.singular_values.max();
        if smax > 1e-12 {
            let ambiguous = svd.singular_values.iter().any(|&s| s > 1e-10 * smax && s < 1e-6 * smax);
            if ambiguous {
                return Err(Error::IllConditioned("derived algebra of ker D has no clear singular-value gap".into()));
            }
        }
        let inner = if smax <= 1e-12 { DMatrix::zeros(r, 0) } else { linalg::range_basis(&b, 1e-8) };
        let m = &ker * &inner;
        let a = linalg::complement_in(&ker, &m, 1e-8);
        (m, a)
    };
    let orthogonality =
        [(&m, &a), (&m, &img), (&a, &img)].iter().map(|(p, q)| (p.transpose() * *q).norm()).fold(0.0, f64::max);
    let full = DMatrix::<f64>::identity(n, n);
    let subalgebra_residual = bracket_leak(&x, &m, &m, &m);
    let ideal_residual = bracket_leak(&x, &full, &img, &img);
    let center_residual = bracket_leak(&x, &a, &ker, &DMatrix::zeros(n, 0));
    let ok = orthogonality <= tol && subalgebra_residual <= tol && ideal_residual <= tol && center_residual <= tol;
    Ok(LeviDecomposition {
        m_part: Subspace::new(m)?,
        a_part: Subspace::new(a)?,
        n_part: Subspace::new(img)?,
        orthogonality,
        subalgebra_residual,
        ideal_residual,
        center_residual,
        tolerance: tol,
        ok,
    })
}

/// The pair `(Bᵀμ(B·,B·), φB)` on the span of the orthonormal columns of `b`.
pub fn restrict(x: &Pair, b: &DMatrix<f64>) -> Result<Pair> {
    let r = b.ncols();
    let mut mu = vec![0.0; r * r * r];
    for i in 0..r {
        for j in 0..r {
            let z = b.transpose() * x.bracket(&b.column(i).into_owned(), &b.column(j).into_owned());
            for k in 0..r {
                mu[(i * r + j) * r + k] = z[k];
            }
        }
    }
    Pair::new(x.codomain().clone(), r, mu, x.phi() * b)
}

#[derive(Debug, Clone, Serialize)]
pub struct NilradicalCheck {
    pub dim: usize,
    pub u_difference: f64,
    pub d_difference: f64,
    pub criticality_residual: f64,
    pub basis: Vec<Vec<f64>>,
}

/// Restriction of the unit representative to `n = im D`; `None` when `n = 0`.
pub fn restrict_nilradical(p: &Pair) -> Result<(Option<Pair>, NilradicalCheck)> {
    let x = p.normalized()?;
    let (_, img) = kernel_and_image(&x)?;
    if img.ncols() == 0 {
        return Ok((
            None,
            NilradicalCheck { dim: 0, u_difference: 0.0, d_difference: 0.0, criticality_residual: 0.0, basis: vec![] },
        ));
    }
    let full = moment_explicit(&x)?;
    let nu = restrict(&x, &img)?;
    let sub = moment_explicit(&nu)?;
    let crit = criticality_test(&nu, 1e-6)?;
    let check = NilradicalCheck {
        dim: img.ncols(),
        u_difference: full.u.metric_distance(&sub.u),
        d_difference: (&sub.d - img.transpose() * &full.d * &img).norm(),
        criticality_residual: crit.projection_residual,
        basis: column_vecs(&img),
    };
    Ok((Some(nu), check))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductiveCheck {
    pub dim: usize,
    pub nilradical_dim: usize,
    pub criticality_residual: f64,
    pub energy: f64,
    pub energy_gap: f64,
    pub k_difference: f64,
    pub u_norm: f64,
}

/// `(ν,ψ)` on `l = ker D` with `ψ(X) = (ad^μ_X|_n, φX) ∈ gc_m(g)`, `m = dim n`.
pub fn reductive_part_pair(p: &Pair) -> Result<(Pair, ReductiveCheck)> {
    let x = p.normalized()?;
    let (ker, img) = kernel_and_image(&x)?;
    let r = ker.ncols();
    if r == 0 {
        return Err(Error::Precondition("ker D is trivial; the reductive part is empty".into()));
    }
    let m = img.ncols();
    let g = x.codomain();
    let codomain = if m == 0 { g.clone() } else { Arc::new(catalog::gc(m, g)?) };
    let dg = g.dim();
    let mut psi = DMatrix::zeros(m * m + dg, r);
    for (j, xj) in ker.column_iter().enumerate() {
        let xj = xj.into_owned();
        let block = img.transpose() * x.ad(&xj) * &img;
        for a in 0..m {
            for b in 0..m {
                psi[(a * m + b, j)] = block[(a, b)];
            }
        }
        psi.view_mut((m * m, j), (dg, 1)).copy_from(&(x.phi() * &xj));
    }
    let base = restrict(&x, &ker)?;
    let pair = Pair::new(codomain, r, base.mu().to_vec(), psi)?;
    let full = moment_explicit(&x)?;
    let mv = moment_explicit(&pair)?;
    let crit = criticality_test(&pair, 1e-6)?;
    let check = ReductiveCheck {
        dim: r,
        nilradical_dim: m,
        criticality_residual: crit.projection_residual,
        energy: mv.energy,
        energy_gap: (mv.energy - 1.0 / r as f64).abs(),
        k_difference: (mv.k - full.k).abs(),
        u_norm: pair.codomain().norm_sq(&mv.u).max(0.0).sqrt(),
    };
    Ok((pair, check))
}
