//! Points `(μ, φ)` of `V_n(g)`, the actions of `GL(n) × Inn(g)` and of its Lie
//! algebra, and the pair-derivation space.
//!
//! Conventions: `ℝⁿ` carries the dot product; the bracket norm is
//! `‖μ‖² = Σ_{i<j,k} μ_ijk²`; `φ` is stored as a `dim g × n` matrix whose
//! column `j` holds the coordinates of `φ(e_j)`, and `‖φ‖² = tr(φᵀ G φ)`.
//! The infinitesimal action is
//! `(A,v)·(μ,φ) = (Aμ(·,·) − μ(A·,·) − μ(·,A·), ad_v φ − φA)`,
//! the derivative of `(g,h)·(μ,φ) = (gμ(g⁻¹·,g⁻¹·), hφg⁻¹)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::QuadraticLieAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{self, max_abs};

/// A point of `V_n(g)`.
#[derive(Debug, Clone)]
pub struct Pair {
    n: usize,
    mu: Vec<f64>,
    phi: DMatrix<f64>,
    codomain: Arc<QuadraticLieAlgebra>,
}

/// A tangent vector to `V_n(g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentElement {
    pub dmu: Vec<f64>,
    pub dphi: DMatrix<f64>,
}

/// An element `(g, h)` of `GL(n) × Inn(g)`.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub gl_part: DMatrix<f64>,
    pub inner_part: DMatrix<f64>,
}

/// Orthonormal basis of `der(μ,φ) ⊂ gl(n) ⊕ g`.
#[derive(Debug, Clone)]
pub struct DerivationSpace {
    /// Elements `(A, v)`, orthonormal for `tr(AᵀB) + ⟨v,w⟩`.
    pub basis: Vec<(DMatrix<f64>, DVector<f64>)>,
    /// Full singular spectrum of `(A,v) ↦ (A,v)·(μ,φ)` in orthonormal coordinates, descending.
    pub singular_values: Vec<f64>,
    /// Absolute cutoff applied to the singular values.
    pub cutoff: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub jacobi: f64,
    pub hom: f64,
}

impl Pair {
    /// Requires `mu.len() == n³`, `phi` of shape `dim g × n` and `μ` antisymmetric.
    pub fn new(codomain: Arc<QuadraticLieAlgebra>, n: usize, mu: Vec<f64>, phi: DMatrix<f64>) -> Result<Self> {
        if mu.len() != n * n * n {
            return Err(Error::Dimension(format!("bracket has {} entries, expected {}", mu.len(), n * n * n)));
        }
        if phi.nrows() != codomain.dim() || phi.ncols() != n {
            return Err(Error::Dimension(format!(
                "phi is {}x{}, expected {}x{}",
                phi.nrows(),
                phi.ncols(),
                codomain.dim(),
                n
            )));
        }
        let scale = mu.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s = mu[(i * n + j) * n + k] + mu[(j * n + i) * n + k];
                    if s.abs() > 1e-12 * scale.max(1.0) {
                        return Err(Error::InvalidPair(format!("bracket not antisymmetric at ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(Pair { n, mu, phi, codomain })
    }

    /// Builds μ from its `i<j` entries, completing antisymmetrically.
    pub fn from_upper(
        codomain: Arc<QuadraticLieAlgebra>,
        n: usize,
        entries: &[(usize, usize, usize, f64)],
        phi: DMatrix<f64>,
    ) -> Result<Self> {
        let mut mu = vec![0.0; n * n * n];
        for &(i, j, k, v) in entries {
            if i >= n || j >= n || k >= n {
                return Err(Error::Dimension(format!("bracket index ({i},{j},{k}) out of range for n={n}")));
            }
            if i >= j {
                return Err(Error::InvalidPair(format!("bracket entry ({i},{j},{k}) must have i<j")));
            }
            mu[(i * n + j) * n + k] += v;
            mu[(j * n + i) * n + k] -= v;
        }
        Pair::new(codomain, n, mu, phi)
    }

    pub fn zero(codomain: Arc<QuadraticLieAlgebra>, n: usize) -> Self {
        let d = codomain.dim();
        Pair { n, mu: vec![0.0; n * n * n], phi: DMatrix::zeros(d, n), codomain }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    #[inline]
    pub fn mu_at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.mu[(i * self.n + j) * self.n + k]
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn codomain(&self) -> &Arc<QuadraticLieAlgebra> {
        &self.codomain
    }

    pub fn with_codomain(&self, codomain: Arc<QuadraticLieAlgebra>) -> Result<Self> {
        Pair::new(codomain, self.n, self.mu.clone(), self.phi.clone())
    }

    /// `μ(x, y)`.
    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += w * self.mu[(i * n + j) * n + k];
                }
            }
        }
        out
    }

    /// Matrix of `ad^μ_x = μ(x, ·)`.
    pub fn ad(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    m[(k, j)] += x[i] * self.mu[(i * n + j) * n + k];
                }
            }
        }
        m
    }

    pub fn mu_norm_sq(&self) -> f64 {
        upper_norm_sq(self.n, &self.mu)
    }

    pub fn phi_norm_sq(&self) -> f64 {
        (self.phi.transpose() * self.codomain.gram() * &self.phi).trace()
    }

    /// `‖(μ,φ)‖²`.
    pub fn norm_sq(&self) -> f64 {
        self.mu_norm_sq() + self.phi_norm_sq()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.norm_sq() == 0.0
    }

    /// `φ*φ = φᵀ G φ`.
    pub fn phi_star_phi(&self) -> DMatrix<f64> {
        linalg::symmetrize(&(self.phi.transpose() * self.codomain.gram() * &self.phi))
    }

    pub fn scaled(&self, c: f64) -> Pair {
        Pair {
            n: self.n,
            mu: self.mu.iter().map(|x| x * c).collect(),
            phi: &self.phi * c,
            codomain: self.codomain.clone(),
        }
    }

    /// The unit-norm representative.
    pub fn normalized(&self) -> Result<Pair> {
        let nrm = self.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::ZeroPair);
        }
        Ok(self.scaled(1.0 / nrm))
    }

    /// `p + h·t` (no renormalization).
    pub fn add_tangent(&self, t: &TangentElement, h: f64) -> Pair {
        Pair {
            n: self.n,
            mu: self.mu.iter().zip(&t.dmu).map(|(a, b)| a + h * b).collect(),
            phi: &self.phi + &t.dphi * h,
            codomain: self.codomain.clone(),
        }
    }

    /// `(μ,φ)` seen as a tangent vector at itself.
    pub fn as_tangent(&self) -> TangentElement {
        TangentElement { dmu: self.mu.clone(), dphi: self.phi.clone() }
    }

    /// Inner product of two tangent vectors at this pair.
    pub fn tangent_inner(&self, a: &TangentElement, b: &TangentElement) -> f64 {
        upper_inner(self.n, &a.dmu, &b.dmu) + (a.dphi.transpose() * self.codomain.gram() * &b.dphi).trace()
    }

    pub fn tangent_norm(&self, t: &TangentElement) -> f64 {
        self.tangent_inner(t, t).max(0.0).sqrt()
    }

    /// Jacobi and homomorphism residuals, each relative to `‖(μ,φ)‖²`.
    /// The zero pair returns `(0, 0)`.
    pub fn residuals(&self) -> (f64, f64) {
        let r = residuals(self);
        (r.jacobi, r.hom)
    }
}

pub(crate) fn upper_norm_sq(n: usize, mu: &[f64]) -> f64 {
    upper_inner(n, mu, mu)
}

pub(crate) fn upper_inner(n: usize, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let base = (i * n + j) * n;
            for k in 0..n {
                s += a[base + k] * b[base + k];
            }
        }
    }
    s
}

impl TangentElement {
    pub fn zero(n: usize, d: usize) -> Self {
        TangentElement { dmu: vec![0.0; n * n * n], dphi: DMatrix::zeros(d, n) }
    }

    pub fn scaled(&self, c: f64) -> Self {
        TangentElement { dmu: self.dmu.iter().map(|x| x * c).collect(), dphi: &self.dphi * c }
    }

    pub fn add(&self, other: &TangentElement, c: f64) -> Self {
        TangentElement {
            dmu: self.dmu.iter().zip(&other.dmu).map(|(a, b)| a + c * b).collect(),
            dphi: &self.dphi + &other.dphi * c,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.dmu.iter().fold(max_abs(&self.dphi), |a, x| a.max(x.abs()))
    }
}

impl GroupElement {
    pub fn identity(n: usize, d: usize) -> Self {
        GroupElement { gl_part: DMatrix::identity(n, n), inner_part: DMatrix::identity(d, d) }
    }

    /// `(exp A, exp ad_v)`.
    pub fn exp(alg: &QuadraticLieAlgebra, a: &DMatrix<f64>, v: &DVector<f64>) -> Self {
        GroupElement { gl_part: linalg::expm(a), inner_part: linalg::expm(&alg.adjoint(v)) }
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &GroupElement) -> Self {
        GroupElement { gl_part: &self.gl_part * &other.gl_part, inner_part: &self.inner_part * &other.inner_part }
    }

    pub fn det(&self) -> f64 {
        if self.gl_part.nrows() == 0 {
            1.0
        } else {
            self.gl_part.determinant()
        }
    }

    /// Largest entry of `h[x,y] − [hx,hy]` over basis pairs, relative to `max|c|·max|h|²`.
    pub fn automorphism_residual(&self, alg: &QuadraticLieAlgebra) -> f64 {
        let d = alg.dim();
        let h = &self.inner_part;
        let mut r = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let lhs = h * alg.bracket(&alg.basis_vector(i), &alg.basis_vector(j));
                let rhs = alg.bracket(&h.column(i).into_owned(), &h.column(j).into_owned());
                r = r.max((lhs - rhs).amax());
            }
        }
        let cmax = alg.structure().iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
        let hmax = max_abs(h).max(f64::MIN_POSITIVE);
        r / (cmax * hmax * hmax)
    }
}

/// Jacobi and homomorphism residuals relative to `‖(μ,φ)‖²`.
pub fn residuals(p: &Pair) -> Residuals {
    let nsq = p.norm_sq();
    if nsq == 0.0 {
        return Residuals { jacobi: 0.0, hom: 0.0 };
    }
    let n = p.n;
    let g = &p.codomain;
    let e: Vec<DVector<f64>> = (0..n).map(|i| unit(n, i)).collect();
    let brackets: Vec<Vec<DVector<f64>>> = (0..n).map(|i| (0..n).map(|j| p.bracket(&e[i], &e[j])).collect()).collect();
    let mut jac = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let r = p.bracket(&e[i], &brackets[j][k])
                    - p.bracket(&brackets[i][j], &e[k])
                    - p.bracket(&e[j], &brackets[i][k]);
                jac = jac.max(r.norm());
            }
        }
    }
    let images: Vec<DVector<f64>> = (0..n).map(|i| p.phi.column(i).into_owned()).collect();
    let mut hom = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let r = &p.phi * &brackets[i][j] - g.bracket(&images[i], &images[j]);
            hom = hom.max(g.norm_sq(&r).max(0.0).sqrt());
        }
    }
    Residuals { jacobi: jac / nsq, hom: hom / nsq }
}

pub(crate) fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// `(g,h)·(μ,φ) = (gμ(g⁻¹·,g⁻¹·), hφg⁻¹)`.
pub fn group_act(g: &GroupElement, p: &Pair) -> Result<Pair> {
    let n = p.n;
    let d = p.codomain.dim();
    if g.gl_part.shape() != (n, n) || g.inner_part.shape() != (d, d) {
        return Err(Error::Dimension("group element does not match the pair".into()));
    }
    let det = g.det();
    if det.abs() <= 1e-12 {
        return Err(Error::SingularGroupElement(det.abs()));
    }
    let gi = g.gl_part.clone().try_inverse().ok_or(Error::SingularGroupElement(det.abs()))?;
    let gm = &g.gl_part;
    // t1[a][b][k] = Σ_c g[k][c] μ[a][b][c]
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut t1 = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let m = p.mu[idx(a, b, c)];
                if m == 0.0 {
                    continue;
                }
                for k in 0..n {
                    t1[idx(a, b, k)] += gm[(k, c)] * m;
                }
            }
        }
    }
    // t2[i][b][k] = Σ_a gi[a][i] t1[a][b][k]
    let mut t2 = vec![0.0; n * n * n];
    for a in 0..n {
        for i in 0..n {
            let w = gi[(a, i)];
            if w == 0.0 {
                continue;
            }
            for b in 0..n {
                for k in 0..n {
                    t2[idx(i, b, k)] += w * t1[idx(a, b, k)];
                }
            }
        }
    }
    let mut mu = vec![0.0; n * n * n];
    for i in 0..n {
        for b in 0..n {
            for j in 0..n {
                let w = gi[(b, j)];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    mu[idx(i, j, k)] += w * t2[idx(i, b, k)];
                }
            }
        }
    }
    // restore exact antisymmetry lost to rounding
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let a = 0.5 * (mu[idx(i, j, k)] - mu[idx(j, i, k)]);
                mu[idx(i, j, k)] = a;
                mu[idx(j, i, k)] = -a;
            }
        }
    }
    let phi = &g.inner_part * &p.phi * gi;
    Ok(Pair { n, mu, phi, codomain: p.codomain.clone() })
}

/// `(A,v)·(μ,φ)`.
pub fn inf_act(a: &DMatrix<f64>, v: &DVector<f64>, p: &Pair) -> TangentElement {
    let n = p.n;
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut dmu = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for c in 0..n {
                    s += a[(k, c)] * p.mu[idx(i, j, c)];
                    s -= p.mu[idx(c, j, k)] * a[(c, i)];
                    s -= p.mu[idx(i, c, k)] * a[(c, j)];
                }
                dmu[idx(i, j, k)] = s;
            }
        }
    }
    let dphi = p.codomain.adjoint(v) * &p.phi - &p.phi * a;
    TangentElement { dmu, dphi }
}

/// `ad^{μ,φ}_X = (ad^μ_X, φX)`.
pub fn pair_adjoint(p: &Pair, x: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    (p.ad(x), &p.phi * x)
}

/// Orthonormal coordinates of a tangent vector: the `i<j` bracket entries, then `G^{1/2}φ` column-major.
pub fn tangent_coords(p: &Pair, t: &TangentElement) -> Result<DVector<f64>> {
    let n = p.n;
    let d = p.codomain.dim();
    let s = p.codomain.gram_sqrt()?;
    let nb = n * (n.saturating_sub(1)) / 2 * n;
    let mut out = DVector::zeros(nb + d * n);
    let mut r = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                out[r] = t.dmu[(i * n + j) * n + k];
                r += 1;
            }
        }
    }
    let sp = s * &t.dphi;
    for (l, x) in sp.iter().enumerate() {
        out[nb + l] = *x;
    }
    Ok(out)
}

/// `gc_n(g)` coordinates `(vec A row-major, v)` of an element.
pub fn gc_coords(a: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut out = DVector::zeros(n * n + v.len());
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = a[(i, j)];
        }
    }
    out.rows_mut(n * n, v.len()).copy_from(v);
    out
}

pub fn from_gc_coords(n: usize, x: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let a = DMatrix::from_fn(n, n, |i, j| x[i * n + j]);
    let v = x.rows(n * n, x.len() - n * n).into_owned();
    (a, v)
}

/// `tr(AᵀB) + ⟨v,w⟩`.
pub fn gc_inner(g: &QuadraticLieAlgebra, x: (&DMatrix<f64>, &DVector<f64>), y: (&DMatrix<f64>, &DVector<f64>)) -> f64 {
    x.0.component_mul(y.0).sum() + g.inner(x.1, y.1)
}

/// `θ̃(A,v) = (−Aᵀ, θv)`.
pub fn gc_theta(g: &QuadraticLieAlgebra, a: &DMatrix<f64>, v: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    (-a.transpose(), g.theta(v))
}

/// Matrix of `(A,v) ↦ (A,v)·p` from orthonormal `gc_n(g)` coordinates
/// `(vec A, G^{1/2}v)` to orthonormal tangent coordinates.
pub fn action_matrix(p: &Pair) -> Result<DMatrix<f64>> {
    let n = p.n;
    let d = p.codomain.dim();
    let si = p.codomain.gram_inv_sqrt()?.clone();
    let rows = n * (n.saturating_sub(1)) / 2 * n + d * n;
    let mut m = DMatrix::zeros(rows, n * n + d);
    for a in 0..n {
        for b in 0..n {
            let mut e = DMatrix::zeros(n, n);
            e[(a, b)] = 1.0;
            let t = inf_act(&e, &DVector::zeros(d), p);
            m.set_column(a * n + b, &tangent_coords(p, &t)?);
        }
    }
    for l in 0..d {
        let v = si.column(l).into_owned();
        let t = inf_act(&DMatrix::zeros(n, n), &v, p);
        m.set_column(n * n + l, &tangent_coords(p, &t)?);
    }
    Ok(m)
}

/// Numerical kernel of the infinitesimal action at `p`, singular values below
/// `tol·σ_max` counted as zero.
pub fn derivation_space(p: &Pair, tol: f64) -> Result<DerivationSpace> {
    if p.is_zero() {
        return Err(Error::ZeroPair);
    }
    let n = p.n;
    let d = p.codomain.dim();
    let si = p.codomain.gram_inv_sqrt()?.clone();
    let m = action_matrix(p)?;
    let ns = linalg::null_space(&m, tol);
    let basis = ns
        .basis
        .column_iter()
        .map(|c| {
            let a = DMatrix::from_fn(n, n, |i, j| c[i * n + j]);
            let w = c.rows(n * n, d).into_owned();
            (a, &si * w)
        })
        .collect();
    Ok(DerivationSpace { basis, singular_values: ns.singular_values, cutoff: ns.cutoff })
}

impl DerivationSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Basis as columns of `gc_n(g)` coordinates.
    pub fn gc_matrix(&self, n: usize, d: usize) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self.basis.iter().map(|(a, v)| gc_coords(a, v)).collect();
        linalg::columns(n * n + d, &cols)
    }

    /// Basis as columns of orthonormal coordinates `(vec A, G^{1/2}v)`.
    pub fn orthonormal_matrix(&self, g: &QuadraticLieAlgebra) -> Result<DMatrix<f64>> {
        let s = g.gram_sqrt()?;
        let cols: Vec<DVector<f64>> = self.basis.iter().map(|(a, v)| gc_coords(a, &(s * v))).collect();
        let rows = self.basis.first().map_or(0, |(a, v)| a.len() + v.len());
        Ok(linalg::columns(rows, &cols))
    }
}

/// The defining equations of `L_n(g)` in orthonormal coordinates: the Jacobi
/// sums for `i<j<k` followed by `G^{1/2}(φμ(e_i,e_j) − [φe_i,φe_j])` for `i<j`.
pub fn variety_equations(p: &Pair) -> Result<DVector<f64>> {
    let n = p.n;
    let g = &p.codomain;
    let s = g.gram_sqrt()?;
    let e: Vec<DVector<f64>> = (0..n).map(|i| unit(n, i)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let r = p.bracket(&e[i], &p.bracket(&e[j], &e[k]))
                    + p.bracket(&e[j], &p.bracket(&e[k], &e[i]))
                    + p.bracket(&e[k], &p.bracket(&e[i], &e[j]));
                out.extend(r.iter());
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let xi = p.phi.column(i).into_owned();
            let xj = p.phi.column(j).into_owned();
            let r = s * (&p.phi * p.bracket(&e[i], &e[j]) - g.bracket(&xi, &xj));
            out.extend(r.iter());
        }
    }
    Ok(DVector::from_vec(out))
}

fn pair_from_coords(p: &Pair, x: &DVector<f64>) -> Result<Pair> {
    let n = p.n;
    let d = p.codomain.dim();
    let si = p.codomain.gram_inv_sqrt()?;
    let nb = n * n.saturating_sub(1) / 2 * n;
    let mut mu = vec![0.0; n * n * n];
    let mut r = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                mu[(i * n + j) * n + k] = x[r];
                mu[(j * n + i) * n + k] = -x[r];
                r += 1;
            }
        }
    }
    let sphi = DMatrix::from_column_slice(d, n, &x.as_slice()[nb..]);
    Ok(Pair { n, mu, phi: si * sphi, codomain: p.codomain.clone() })
}

/// Gauss–Newton projection onto `L_n(g)`: repeated minimal-norm corrections
/// `δ = −J⁺F` of the defining equations. Stops after `iters` rounds or once the
/// residuals fall below `tol`.
pub fn project_to_variety(p: &Pair, iters: usize, tol: f64) -> Result<Pair> {
    let mut q = p.clone();
    for _ in 0..iters {
        let (j, h) = q.residuals();
        if j.max(h) <= tol {
            break;
        }
        let x = tangent_coords(&q, &q.as_tangent())?;
        let f = variety_equations(&q)?;
        // the equations are quadratic, so central differences are exact derivatives
        let mut jac = DMatrix::zeros(f.len(), x.len());
        for c in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += 1.0;
            xm[c] -= 1.0;
            let fp = variety_equations(&pair_from_coords(&q, &xp)?)?;
            let fm = variety_equations(&pair_from_coords(&q, &xm)?)?;
            jac.set_column(c, &((fp - fm) * 0.5));
        }
        let svd = nalgebra::SVD::new(jac, true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let delta =
            svd.solve(&f, 1e-10 * smax.max(f64::MIN_POSITIVE)).map_err(|e| Error::IllConditioned(e.to_string()))?;
        q = pair_from_coords(&q, &(x - delta))?;
    }
    Ok(q)
}

/// Whether `g` fixes `p` (membership in `Aut(μ,φ)`), at relative tolerance `tol`.
pub fn fixes(g: &GroupElement, p: &Pair, tol: f64) -> Result<bool> {
    let q = group_act(g, p)?;
    let diff = TangentElement { dmu: q.mu.iter().zip(&p.mu).map(|(a, b)| a - b).collect(), dphi: &q.phi - &p.phi };
    Ok(p.tangent_norm(&diff) <= tol * p.norm().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn sl2() -> Arc<QuadraticLieAlgebra> {
        Arc::new(catalog::sl(2).unwrap())
    }

    #[test]
    fn residuals_zero_bracket_commuting_image() {
        let g = sl2();
        let phi = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let p = Pair::new(g, 2, vec![0.0; 8], phi).unwrap();
        assert_eq!(p.residuals(), (0.0, 0.0));
    }

    #[test]
    fn residuals_identity_sl2() {
        let p = catalog::pair("identity-sl2").unwrap();
        let (j, h) = p.residuals();
        assert!(j <= 1e-14 && h <= 1e-14);
    }

    #[test]
    fn residuals_non_commuting_image() {
        let g = sl2();
        let phi = DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let p = Pair::new(g, 2, vec![0.0; 8], phi).unwrap();
        let (j, h) = p.residuals();
        assert_eq!(j, 0.0);
        // ‖[E,F]‖ = ‖H‖ = √8 and ‖φ‖² = 4 + 4
        assert!((h - 8f64.sqrt() / 8.0).abs() < 1e-15);
    }

    #[test]
    fn zero_pair_residuals() {
        let p = Pair::zero(sl2(), 2);
        assert_eq!(p.residuals(), (0.0, 0.0));
        assert!(matches!(p.normalized(), Err(Error::ZeroPair)));
        assert!(matches!(derivation_space(&p, 1e-8), Err(Error::ZeroPair)));
    }

    #[test]
    fn antisymmetry_is_enforced() {
        let g = sl2();
        let mut mu = vec![0.0; 8];
        mu[(0 * 2 + 1) * 2] = 1.0;
        assert!(Pair::new(g.clone(), 2, mu, DMatrix::zeros(3, 2)).is_err());
        let p = Pair::from_upper(g, 2, &[(0, 1, 0, 1.0)], DMatrix::zeros(3, 2)).unwrap();
        assert_eq!(p.mu_at(1, 0, 0), -1.0);
        assert_eq!(p.mu_norm_sq(), 1.0);
    }

    #[test]
    fn identity_group_element() {
        let p = catalog::pair("heisenberg-sl3").unwrap();
        let q = group_act(&GroupElement::identity(3, 8), &p).unwrap();
        assert_eq!(q.mu(), p.mu());
        assert_eq!(q.phi(), p.phi());
    }

    #[test]
    fn scalar_group_element_scales_by_inverse() {
        let p = catalog::pair("borel-sl3").unwrap();
        let c = 3.0;
        let g = GroupElement { gl_part: DMatrix::identity(5, 5) * c, inner_part: DMatrix::identity(8, 8) };
        let q = group_act(&g, &p).unwrap();
        for (a, b) in q.mu().iter().zip(p.mu()) {
            assert!((a - b / c).abs() < 1e-15);
        }
        assert!((q.phi() - p.phi() / c).norm() < 1e-15);
    }

    #[test]
    fn singular_group_element_rejected() {
        let p = catalog::pair("borel-sl2").unwrap();
        let g = GroupElement { gl_part: DMatrix::zeros(2, 2), inner_part: DMatrix::identity(3, 3) };
        assert!(matches!(group_act(&g, &p), Err(Error::SingularGroupElement(_))));
    }

    #[test]
    fn euler_direction() {
        let p = catalog::pair("borel-sl3").unwrap();
        let t = inf_act(&DMatrix::identity(5, 5), &DVector::zeros(8), &p);
        let expected = p.as_tangent().scaled(-1.0);
        assert!(t.add(&expected, -1.0).max_abs() < 1e-15);
        let z = inf_act(&DMatrix::zeros(5, 5), &DVector::zeros(8), &p);
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn inf_act_is_derivative_of_group_act() {
        let p = catalog::pair("borel-sl3").unwrap();
        let g = p.codomain().clone();
        let a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2);
        let v = DVector::from_fn(8, |i, _| (i as f64 * 0.37).sin());
        let t = 1e-4;
        let q = group_act(&GroupElement::exp(&g, &(&a * t), &(&v * t)), &p).unwrap();
        let fd = TangentElement {
            dmu: q.mu().iter().zip(p.mu()).map(|(x, y)| (x - y) / t).collect(),
            dphi: (q.phi() - p.phi()) / t,
        };
        let exact = inf_act(&a, &v, &p);
        let err = p.tangent_norm(&fd.add(&exact, -1.0));
        assert!(err < 1e-3 * p.norm(), "{err}");
    }

    #[test]
    fn derivation_dimensions() {
        // sl(2) bracket, φ = 0: der(μ) ⊕ g
        let g = sl2();
        let s = catalog::sl(2).unwrap();
        let p = Pair::new(g, 3, s.structure().to_vec(), DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(derivation_space(&p, 1e-8).unwrap().dim(), 6);
        let p = catalog::pair("inclusion-su2").unwrap();
        assert_eq!(derivation_space(&p, 1e-8).unwrap().dim(), 3);
        let p = catalog::pair("cartan-line-sl2").unwrap();
        let ds = derivation_space(&p, 1e-8).unwrap();
        assert_eq!(ds.dim(), 1);
        let (a, v) = &ds.basis[0];
        assert!(a[(0, 0)].abs() < 1e-12);
        assert!(v[1].abs() < 1e-12 && v[2].abs() < 1e-12);
    }

    #[test]
    fn derivation_basis_is_orthonormal_and_annihilates() {
        let p = catalog::pair("heisenberg-sl3").unwrap();
        let g = p.codomain().clone();
        let ds = derivation_space(&p, 1e-8).unwrap();
        for (i, x) in ds.basis.iter().enumerate() {
            let t = inf_act(&x.0, &x.1, &p);
            assert!(p.tangent_norm(&t) <= 10.0 * ds.cutoff * p.norm().max(1.0));
            for (j, y) in ds.basis.iter().enumerate() {
                let ip = gc_inner(&g, (&x.0, &x.1), (&y.0, &y.1));
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pair_adjoint_examples() {
        let p = catalog::pair("identity-su2").unwrap();
        let x = unit(3, 0);
        let (a, v) = pair_adjoint(&p, &x);
        assert_eq!(a, p.codomain().adjoint(&x));
        assert_eq!(v, x);
        assert!(p.tangent_norm(&inf_act(&a, &v, &p)) <= 1e-12);
        let (a0, v0) = pair_adjoint(&p, &DVector::zeros(3));
        assert_eq!(a0.norm() + v0.norm(), 0.0);
    }

    #[test]
    fn gc_coordinate_round_trip() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v = DVector::from_vec(vec![5.0, 6.0, 7.0]);
        let x = gc_coords(&a, &v);
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(from_gc_coords(2, &x), (a, v));
    }

    #[test]
    fn exp_group_element_is_automorphism() {
        let g = catalog::sl(3).unwrap();
        let v = DVector::from_fn(8, |i, _| 0.1 * i as f64 - 0.3);
        let e = GroupElement::exp(&g, &DMatrix::identity(2, 2), &v);
        assert!(e.automorphism_residual(&g) < 1e-12);
        let p = catalog::pair("cartan-sl3").unwrap();
        assert!(fixes(&GroupElement::identity(2, 8), &p, 1e-12).unwrap());
        assert!(!fixes(&e, &p, 1e-6).unwrap());
    }
}
