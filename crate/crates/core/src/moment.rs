//! Moment map, energy and energy gradient.
//!
//! `M(μ,φ) = (M(μ) − φ*φ, Σ_i [θφe_i, φe_i])` with
//! `M(μ)_ab = ½ Σ_ij μ_ij^a μ_ij^b − Σ_ik μ_ai^k μ_bi^k`. It is characterized by
//! `⟨M, Z⟩ = ⟨Z·(μ,φ), (μ,φ)⟩` for every `Z` in `p̃ = Sym(n) ⊕ p`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs};
use crate::pairs::{inf_act, Pair, TangentElement};

#[derive(Debug, Clone)]
pub struct MomentValue {
    /// `M(μ) − φ*φ`.
    pub m_gl: DMatrix<f64>,
    /// `u = Σ_i [θφe_i, φe_i]`.
    pub u: DVector<f64>,
    pub norm_pair_sq: f64,
    /// `‖M‖²`.
    pub norm_m_sq: f64,
    pub k: f64,
    /// `M_gl + k·I`, symmetrized.
    pub d: DMatrix<f64>,
    pub energy: f64,
}

impl MomentValue {
    fn assemble(p: &Pair, m_gl: DMatrix<f64>, u: DVector<f64>) -> Self {
        let n = p.n();
        let norm_pair_sq = p.norm_sq();
        let m_gl = linalg::symmetrize(&m_gl);
        let norm_m_sq = m_gl.norm_squared() + p.codomain().norm_sq(&u);
        let k = norm_m_sq / norm_pair_sq;
        let d = linalg::symmetrize(&(&m_gl + DMatrix::identity(n, n) * k));
        MomentValue { m_gl, u, norm_pair_sq, norm_m_sq, k, d, energy: k / norm_pair_sq }
    }

    /// `⟨M, (A, v)⟩ = tr(M_glᵀ A) + ⟨u, v⟩`.
    pub fn pairing(&self, p: &Pair, a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
        self.m_gl.component_mul(a).sum() + p.codomain().inner(&self.u, v)
    }

    /// `‖(D, u)‖²`.
    pub fn du_norm_sq(&self, p: &Pair) -> f64 {
        self.d.norm_squared() + p.codomain().norm_sq(&self.u)
    }

    /// `|k·tr D − ‖(D,u)‖²|` relative to `‖(μ,φ)‖⁴`.
    pub fn trace_identity_residual(&self, p: &Pair) -> f64 {
        (self.k * self.d.trace() - self.du_norm_sq(p)).abs() / (self.norm_pair_sq * self.norm_pair_sq)
    }

    /// `‖θu + u‖` relative to `max(‖u‖, ‖(μ,φ)‖²)`.
    pub fn u_in_p_residual(&self, p: &Pair) -> f64 {
        let g = p.codomain();
        let r = g.theta(&self.u) + &self.u;
        g.norm_sq(&r).max(0.0).sqrt() / g.norm_sq(&self.u).sqrt().max(self.norm_pair_sq)
    }

    /// Largest discrepancy against another value, relative to `‖(μ,φ)‖²`.
    pub fn discrepancy(&self, other: &MomentValue) -> f64 {
        let a = max_abs(&(&self.m_gl - &other.m_gl));
        let b = (&self.u - &other.u).amax();
        a.max(b) / self.norm_pair_sq
    }
}

/// `M(μ)` alone.
pub fn bracket_moment(p: &Pair) -> DMatrix<f64> {
    let n = p.n();
    let mut m = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..=a {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += 0.5 * p.mu_at(i, j, a) * p.mu_at(i, j, b);
                }
                for k in 0..n {
                    s -= p.mu_at(a, i, k) * p.mu_at(b, i, k);
                }
            }
            m[(a, b)] = s;
            m[(b, a)] = s;
        }
    }
    m
}

/// `Σ_i [θφe_i, φe_i]`.
pub fn u_component(p: &Pair) -> DVector<f64> {
    let g = p.codomain();
    let mut u = DVector::zeros(g.dim());
    for i in 0..p.n() {
        let x = p.phi().column(i).into_owned();
        u += g.bracket(&g.theta(&x), &x);
    }
    u
}

/// Moment value from the closed formula.
pub fn moment_explicit(p: &Pair) -> Result<MomentValue> {
    if p.is_zero() {
        return Err(Error::ZeroPair);
    }
    let m_gl = bracket_moment(p) - p.phi_star_phi();
    Ok(MomentValue::assemble(p, m_gl, u_component(p)))
}

/// Orthonormal basis of `Sym(n)`: `E_ii` then `(E_ij + E_ji)/√2` for `i<j`.
pub fn sym_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        let mut e = DMatrix::zeros(n, n);
        e[(i, i)] = 1.0;
        out.push(e);
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = r;
            e[(j, i)] = r;
            out.push(e);
        }
    }
    out
}

/// Moment value obtained by expanding `⟨Z·p, p⟩` over an orthonormal basis of `p̃`.
pub fn moment_definitional(p: &Pair) -> Result<MomentValue> {
    if p.is_zero() {
        return Err(Error::ZeroPair);
    }
    let n = p.n();
    let g = p.codomain();
    let d = g.dim();
    let target = p.as_tangent();
    let mut m_gl = DMatrix::zeros(n, n);
    for z in sym_basis(n) {
        let c = p.tangent_inner(&inf_act(&z, &DVector::zeros(d), p), &target);
        m_gl += z * c;
    }
    let pb = g.p_basis()?;
    let mut u = DVector::zeros(d);
    let zero = DMatrix::zeros(n, n);
    for col in pb.column_iter() {
        let v = col.into_owned();
        let c = p.tangent_inner(&inf_act(&zero, &v, p), &target);
        u += v * c;
    }
    Ok(MomentValue::assemble(p, m_gl, u))
}

/// `E(μ:φ) = ‖M‖²/‖(μ,φ)‖⁴`.
pub fn energy(p: &Pair) -> Result<f64> {
    Ok(moment_explicit(p)?.energy)
}

/// `∇E = 4·(D,u)·x̂` at the unit representative `x̂` of `p`.
pub fn energy_gradient(p: &Pair) -> Result<TangentElement> {
    let x = p.normalized()?;
    let mv = moment_explicit(&x)?;
    Ok(inf_act(&mv.d, &mv.u, &x).scaled(4.0))
}

/// Gradient together with the unit representative and its moment value.
pub fn gradient_at_unit(x: &Pair) -> Result<(MomentValue, TangentElement)> {
    let mv = moment_explicit(x)?;
    let g = inf_act(&mv.d, &mv.u, x).scaled(4.0);
    Ok((mv, g))
}

/// `max |⟨M, (δ,v)⟩| / (‖M‖·‖(δ,v)‖)` over the given derivations.
pub fn derivation_orthogonality_check(p: &Pair, derivations: &[(DMatrix<f64>, DVector<f64>)]) -> Result<f64> {
    let mv = moment_explicit(p)?;
    let nm = mv.norm_m_sq.sqrt();
    if nm == 0.0 {
        return Ok(0.0);
    }
    let g = p.codomain();
    let mut worst = 0.0f64;
    for (a, v) in derivations {
        let nz = (a.norm_squared() + g.norm_sq(v)).sqrt();
        if nz == 0.0 {
            continue;
        }
        worst = worst.max(mv.pairing(p, a, v).abs() / (nm * nz));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy)]
pub struct ThetaPairingEntry {
    /// `⟨M, [θ̃Z, Z]⟩` for the derivation `Z`.
    pub value: f64,
    /// The value vanishes at tolerance.
    pub tight: bool,
    /// For tight entries: `θ̃Z` annihilates the pair.
    pub theta_image_is_derivation: bool,
}

/// For each derivation `Z = (δ, v)` evaluates `⟨M, [(−δᵀ, θv), (δ, v)]⟩`, which is
/// non-negative and vanishes exactly when `(−δᵀ, θv)` is again a derivation.
pub fn theta_pairing_check(
    p: &Pair,
    derivations: &[(DMatrix<f64>, DVector<f64>)],
    tol: f64,
) -> Result<Vec<ThetaPairingEntry>> {
    let mv = moment_explicit(p)?;
    let g = p.codomain();
    let scale = mv.norm_pair_sq;
    let mut out = Vec::with_capacity(derivations.len());
    for (a, v) in derivations {
        let ta = -a.transpose();
        let tv = g.theta(v);
        let br_a = &ta * a - a * &ta;
        let br_v = g.bracket(&tv, v);
        let value = mv.pairing(p, &br_a, &br_v);
        let tight = value.abs() <= tol * scale;
        let image = inf_act(&ta, &tv, p);
        let theta_image_is_derivation = p.tangent_norm(&image) <= 1e-8 * scale.max(1.0);
        out.push(ThetaPairingEntry { value, tight, theta_image_is_derivation });
    }
    Ok(out)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::pairs::{derivation_space, Pair};
    use std::sync::Arc;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cartan_line() {
        let p = catalog::pair("cartan-line-sl2").unwrap();
        let mv = moment_explicit(&p).unwrap();
        assert!(close(mv.m_gl[(0, 0)], -1.0, 1e-14));
        assert!(mv.u.amax() < 1e-15);
        assert!(close(mv.k, 1.0, 1e-14));
        assert!(mv.d[(0, 0)].abs() < 1e-14);
        assert!(close(mv.energy, 1.0, 1e-14));
        let def = moment_definitional(&p).unwrap();
        assert!(mv.discrepancy(&def) < 1e-14);
    }

    #[test]
    fn pure_bracket() {
        let p = catalog::pair("identity-su2").unwrap();
        let mu_only = Pair::new(p.codomain().clone(), 3, p.mu().to_vec(), DMatrix::zeros(3, 3)).unwrap();
        let mv = moment_explicit(&mu_only).unwrap();
        assert_eq!(mv.u, DVector::zeros(3));
        assert_eq!(mv.m_gl, bracket_moment(&mu_only));
        // standard su(2) bracket: M(μ) = −I
        assert!((&mv.m_gl + DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn identity_su2() {
        let p = catalog::pair("identity-su2").unwrap();
        let mv = moment_explicit(&p).unwrap();
        assert!((&mv.m_gl + DMatrix::identity(3, 3) * 3.0).amax() < 1e-14);
        assert!(close(mv.energy, 1.0 / 3.0, 1e-14));
    }

    #[test]
    fn heisenberg_values() {
        let p = catalog::pair("heisenberg-sl3").unwrap();
        let mv = moment_explicit(&p).unwrap();
        let expect = [-7.0 / 6.0, -7.0 / 6.0, -5.0 / 6.0];
        for i in 0..3 {
            assert!(close(mv.m_gl[(i, i)], expect[i], 1e-14));
        }
        assert!(close(mv.norm_pair_sq, 19.0 / 6.0, 1e-14));
        assert!(close(mv.k, 1.5, 1e-14));
        assert!(close(mv.energy, 9.0 / 19.0, 1e-14));
        assert!(close(p.codomain().norm_sq(&mv.u), 4.0 / 3.0, 1e-14));
    }

    #[test]
    fn borel_sl2_values() {
        let p = catalog::pair("borel-sl2").unwrap();
        let mv = moment_explicit(&p).unwrap();
        assert!(close(mv.k, 1.5, 1e-14));
        assert!(close(mv.energy, 0.6, 1e-14));
        assert!(mv.d[(0, 0)].abs() < 1e-14 && close(mv.d[(1, 1)], 0.5, 1e-14));
        // u = H/4
        assert!(close(mv.u[0], 0.25, 1e-14) && mv.u[1].abs() < 1e-15);
    }

    #[test]
    fn nilpotent_line() {
        let p = catalog::pair("nilpotent-line-sl2").unwrap();
        let mv = moment_explicit(&p).unwrap();
        assert!(close(mv.m_gl[(0, 0)], -4.0, 1e-14));
        assert!(close(mv.u[0], 1.0, 1e-14));
        assert!(close(mv.k, 6.0, 1e-14));
        assert!(close(mv.energy, 1.5, 1e-14));
    }

    #[test]
    fn quadratic_scaling() {
        let p = catalog::pair("identity-su2").unwrap();
        let q = p.scaled(2.0);
        let (a, b) = (moment_explicit(&p).unwrap(), moment_definitional(&q).unwrap());
        assert!((&b.m_gl - &a.m_gl * 4.0).amax() < 1e-13);
        assert!(close(a.energy, b.energy, 1e-14));
    }

    #[test]
    fn projection_property() {
        let p = catalog::pair("principal-sl3").unwrap();
        let mv = moment_explicit(&p).unwrap();
        let g = p.codomain();
        let pb = g.p_basis().unwrap();
        for s in 0..10 {
            let f = |i: usize, j: usize| ((i * 3 + j * 5 + s * 7) as f64 * 0.71).sin();
            let a = linalg::symmetrize(&DMatrix::from_fn(3, 3, f));
            let v = &pb * DVector::from_fn(pb.ncols(), |i, _| f(i, s));
            let lhs = mv.pairing(&p, &a, &v);
            let rhs = p.tangent_inner(&inf_act(&a, &v, &p), &p.as_tangent());
            assert!((lhs - rhs).abs() < 1e-10 * mv.norm_pair_sq);
        }
    }

    #[test]
    fn zero_pair_rejected() {
        let p = Pair::zero(Arc::new(catalog::su2()), 2);
        assert!(matches!(moment_explicit(&p), Err(Error::ZeroPair)));
        assert!(matches!(moment_definitional(&p), Err(Error::ZeroPair)));
        assert!(matches!(energy_gradient(&p), Err(Error::ZeroPair)));
    }

    #[test]
    fn gradient_vanishes_at_minimal_pair() {
        let p = catalog::pair("cartan-line-sl2").unwrap();
        let g = energy_gradient(&p).unwrap();
        assert!(p.tangent_norm(&g) <= 1e-12);
    }

    #[test]
    fn gradient_is_projective() {
        let p = catalog::pair("principal-sl3").unwrap();
        let a = energy_gradient(&p).unwrap();
        let b = energy_gradient(&p.scaled(3.7)).unwrap();
        assert!(a.add(&b, -1.0).max_abs() < 1e-12);
    }

    #[test]
    fn theta_pairing_of_derivations() {
        let p = catalog::pair("identity-su2").unwrap();
        let ds = derivation_space(&p, 1e-8).unwrap();
        assert!(derivation_orthogonality_check(&p, &ds.basis).unwrap() <= 1e-12);
        let corrupt = vec![(DMatrix::identity(3, 3), DVector::zeros(3))];
        assert!(derivation_orthogonality_check(&p, &corrupt).unwrap() > 1e-6);

        let h = catalog::pair("heisenberg-sl3").unwrap();
        let ds = derivation_space(&h, 1e-8).unwrap();
        let entries = theta_pairing_check(&h, &ds.basis, 1e-10).unwrap();
        assert!(entries.iter().all(|e| e.value >= -1e-10));
        assert!(entries.iter().any(|e| e.value > 1e-6));
        assert!(entries.iter().filter(|e| e.tight).all(|e| e.theta_image_is_derivation));
    }
}
