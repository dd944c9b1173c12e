use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{centralizer, killing_form, QuadraticLieAlgebra, Subspace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::moment::{bracket_moment, moment_explicit};
use crate::pairs::{derivation_space, upper_norm_sq, GroupElement, Pair};
use crate::random;

use super::criticality::DER_TOL;
use super::levi::{column_vecs, restrict};

#[derive(Debug, Clone, Serialize)]
pub struct FactorReport {
    /// `"center"` or `"simple"`.
    pub kind: String,
    pub dim: usize,
    pub homothety_constant: f64,
    pub homothety_residual: f64,
    pub energy: f64,
    pub energy_gap: f64,
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalReport {
    pub n: usize,
    pub energy: f64,
    pub energy_gap: f64,
    pub center_dim: usize,
    pub factors: Vec<FactorReport>,
    pub image_orthogonality: f64,
    pub ideal_residual: f64,
    /// `max_X ‖[φ*φ, ad_X]‖` over the basis.
    pub phi_ad_commutator: f64,
    /// `(dim der, dim centralizer(im φ), n)` when `h_μ` is semi-simple.
    pub der_centralizer_dims: Option<(usize, usize, usize)>,
}

pub(crate) fn minimal_energy_gap(x: &Pair) -> Result<(f64, f64)> {
    let e = moment_explicit(x)?.energy;
    Ok((e, (e - 1.0 / x.n() as f64).abs()))
}

/// Orthonormal basis of the center: kernel of `X ↦ ad^μ_X`.
fn center(x: &Pair) -> DMatrix<f64> {
    let n = x.n();
    let mut m = DMatrix::zeros(n * n, n);
    for i in 0..n {
        let ad = x.ad(&crate::pairs::unit(n, i));
        m.set_column(i, &DVector::from_column_slice(ad.as_slice()));
    }
    linalg::null_space(&m, 1e-8).basis
}

/// Splits the span of `c` into minimal ideals using a generic symmetric
/// element of the commutant of `{ad_X|_c}`.
fn simple_ideals(x: &Pair, c: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let r = c.ncols();
    if r == 0 {
        return Ok(vec![]);
    }
    let ads: Vec<DMatrix<f64>> = c.column_iter().map(|v| c.transpose() * x.ad(&v.into_owned()) * c).collect();
    let sym: Vec<DMatrix<f64>> = crate::moment::sym_basis(r);
    let mut m = DMatrix::zeros(ads.len() * r * r, sym.len());
    for (j, s) in sym.iter().enumerate() {
        let mut col = Vec::with_capacity(ads.len() * r * r);
        for a in &ads {
            col.extend((a * s - s * a).iter().copied());
        }
        m.set_column(j, &DVector::from_vec(col));
    }
    let comm = linalg::null_space(&m, 1e-9).basis;
    let mut rng = random::rng(0x5eed);
    let coeffs = random::gaussian_vector(&mut rng, comm.ncols());
    let mut s = DMatrix::zeros(r, r);
    for (j, t) in sym.iter().enumerate() {
        let w: f64 = (0..comm.ncols()).map(|l| comm[(j, l)] * coeffs[l]).sum();
        s += t * w;
    }
    let (e, v) = linalg::sym_eigen(&s);
    let spread = e.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    let mut out = Vec::new();
    let mut i = 0;
    while i < r {
        let mut j = i + 1;
        while j < r && e[j] - e[j - 1] <= 1e-6 * spread {
            j += 1;
        }
        out.push(c * v.columns(i, j - i));
        i = j;
    }
    if out.len() != comm.ncols() {
        return Err(Error::IllConditioned(format!(
            "{} eigenvalue clusters for a {}-dimensional symmetric commutant",
            out.len(),
            comm.ncols()
        )));
    }
    Ok(out)
}

fn homothety(x: &Pair, b: &DMatrix<f64>) -> (f64, f64) {
    let f = b.transpose() * x.phi_star_phi() * b;
    let k = b.ncols().max(1) as f64;
    let c = f.trace() / k;
    let res = (&f - DMatrix::identity(b.ncols(), b.ncols()) * c).norm();
    (c, res)
}

pub fn minimal_decompose(p: &Pair, tol: f64) -> Result<MinimalReport> {
    let x = p.normalized()?;
    let n = x.n();
    let (energy, energy_gap) = minimal_energy_gap(&x)?;
    if energy_gap > tol {
        return Err(Error::Precondition(format!("energy {energy} is not 1/{n} within {tol:e}")));
    }
    let z = center(&x);
    let rest = linalg::complement_in(&DMatrix::identity(n, n), &z, 1e-8);
    let ideals = simple_ideals(&x, &rest)?;

    let mut parts: Vec<(&str, DMatrix<f64>)> = Vec::new();
    if z.ncols() > 0 {
        parts.push(("center", z.clone()));
    }
    for i in &ideals {
        parts.push(("simple", i.clone()));
    }
    let g = x.codomain();
    let gram = g.gram();
    let mut factors = Vec::new();
    for (kind, b) in &parts {
        let (c, res) = homothety(&x, b);
        let sub = restrict(&x, b)?;
        let (e, gap) = if sub.is_zero() { (f64::NAN, f64::INFINITY) } else { minimal_energy_gap(&sub)? };
        factors.push(FactorReport {
            kind: kind.to_string(),
            dim: b.ncols(),
            homothety_constant: c,
            homothety_residual: res,
            energy: e,
            energy_gap: gap,
            basis: column_vecs(b),
        });
    }
    let mut image_orthogonality: f64 = 0.0;
    let mut ideal_residual: f64 = 0.0;
    for (i, (_, a)) in parts.iter().enumerate() {
        for (j, (_, b)) in parts.iter().enumerate() {
            if i < j {
                let pa = x.phi() * a;
                let pb = x.phi() * b;
                image_orthogonality = image_orthogonality.max((pa.transpose() * gram * pb).norm());
            }
            if i != j {
                for va in a.column_iter() {
                    for vb in b.column_iter() {
                        ideal_residual = ideal_residual.max(x.bracket(&va.into_owned(), &vb.into_owned()).norm());
                    }
                }
            }
        }
    }
    let f = x.phi_star_phi();
    let phi_ad_commutator = (0..n)
        .map(|i| {
            let ad = x.ad(&crate::pairs::unit(n, i));
            (&f * &ad - &ad * &f).norm()
        })
        .fold(0.0, f64::max);
    let der_centralizer_dims = if z.ncols() == 0 {
        let img = g.orthonormalize(x.phi(), 1e-8)?;
        let cz = centralizer(g, &Subspace::new(img)?, 1e-8);
        Some((derivation_space(&x, DER_TOL)?.dim(), cz.dim(), n))
    } else {
        None
    };
    Ok(MinimalReport {
        n,
        energy,
        energy_gap,
        center_dim: z.ncols(),
        factors,
        image_orthogonality,
        ideal_residual,
        phi_ad_commutator,
        der_centralizer_dims,
    })
}

fn empty_codomain() -> Arc<QuadraticLieAlgebra> {
    Arc::new(
        QuadraticLieAlgebra::new("0", 0, vec![], DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
            .expect("zero algebra is well formed"),
    )
}

/// The pair `(μ, 0)` with a zero-dimensional codomain.
pub fn bracket_only(n: usize, mu: &[f64]) -> Result<Pair> {
    Pair::new(empty_codomain(), n, mu.to_vec(), DMatrix::zeros(0, n))
}

fn automorphism_residual(n: usize, mu: &[f64], t: &DMatrix<f64>) -> Result<f64> {
    let p = bracket_only(n, mu)?;
    let scale = p.mu_norm_sq().sqrt().max(1e-300);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let ei = crate::pairs::unit(n, i);
            let ej = crate::pairs::unit(n, j);
            let lhs = t * p.bracket(&ei, &ej);
            let rhs = p.bracket(&t.column(i).into_owned(), &t.column(j).into_owned());
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst / scale)
}

/// `n/(2‖μ‖²)`, the constant relating the dot product to `−B_μ(θ'·,·)` at a minimal bracket.
pub fn metric_constant(n: usize, mu: &[f64]) -> f64 {
    n as f64 / (2.0 * upper_norm_sq(n, mu))
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugeResult {
    #[serde(skip)]
    pub element: GroupElement,
    pub gl_part: Vec<Vec<f64>>,
    pub mu_prime: Vec<f64>,
    pub theta_prime: Vec<Vec<f64>>,
    /// `‖M(μ') + (‖μ'‖²/n)I‖ / ‖μ'‖²`.
    pub residual: f64,
}

/// `g = P^{1/2}` for `P = −(n/(2‖μ‖²)) θ'ᵀ B_μ`, so that `g·μ` has scalar moment.
pub fn minimal_metric_gauge(n: usize, mu: &[f64], theta_prime: &DMatrix<f64>) -> Result<GaugeResult> {
    if theta_prime.nrows() != n || theta_prime.ncols() != n {
        return Err(Error::Dimension(format!("involution must be {n}x{n}")));
    }
    let sq = (theta_prime * theta_prime - DMatrix::identity(n, n)).norm();
    if sq > 1e-8 {
        return Err(Error::Precondition(format!("θ' is not an involution (residual {sq:e})")));
    }
    let aut = automorphism_residual(n, mu, theta_prime)?;
    if aut > 1e-8 {
        return Err(Error::Precondition(format!("θ' is not an automorphism (residual {aut:e})")));
    }
    let b = killing_form(n, mu);
    let (be, _) = linalg::sym_eigen(&b);
    let bmax = be.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if bmax == 0.0 || be.iter().any(|x| x.abs() <= 1e-10 * bmax) {
        return Err(Error::Precondition("Killing form of μ is degenerate".into()));
    }
    let p = -(theta_prime.transpose() * &b) * metric_constant(n, mu);
    let (pe, _) = linalg::sym_eigen(&linalg::symmetrize(&p));
    if (&p - p.transpose()).norm() > 1e-8 * p.norm() || pe[0] <= 0.0 {
        return Err(Error::Precondition("θ' is not a Cartan involution: induced form is not positive definite".into()));
    }
    let g = linalg::sym_apply(&linalg::symmetrize(&p), f64::sqrt);
    let gi = linalg::sym_apply(&linalg::symmetrize(&p), |x| 1.0 / x.sqrt());
    let element = GroupElement { gl_part: g.clone(), inner_part: DMatrix::zeros(0, 0) };
    let moved = crate::pairs::group_act(&element, &bracket_only(n, mu)?)?;
    let m = bracket_moment(&moved);
    let nm = moved.mu_norm_sq();
    let residual = (&m + DMatrix::identity(n, n) * (nm / n as f64)).norm() / nm;
    let tp = &g * theta_prime * &gi;
    Ok(GaugeResult {
        element,
        gl_part: row_vecs(&g),
        mu_prime: moved.mu().to_vec(),
        theta_prime: row_vecs(&tp),
        residual,
    })
}

pub(crate) fn row_vecs(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MostowReport {
    pub theta_prime: Vec<Vec<f64>>,
    pub square_residual: f64,
    pub automorphism_residual: f64,
    pub intertwining_residual: f64,
    pub metric_residual: f64,
    pub factor_dims: Vec<usize>,
    pub tolerance: f64,
    pub ok: bool,
}

/// `θ' = (φ_i*φ_i)⁻¹ φ_i* θ φ_i` on each simple ideal, assembled on `ℝⁿ`.
pub fn mostow_involution(p: &Pair, tol: f64) -> Result<(DMatrix<f64>, MostowReport)> {
    let x = p.normalized()?;
    let n = x.n();
    let (energy, gap) = minimal_energy_gap(&x)?;
    if gap > tol {
        return Err(Error::Precondition(format!("energy {energy} exceeds 1/{n}; θ' = φ*θφ needs a minimal pair")));
    }
    let b = killing_form(n, x.mu());
    let (be, _) = linalg::sym_eigen(&b);
    let bmax = be.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if bmax == 0.0 || be.iter().any(|v| v.abs() <= 1e-10 * bmax) {
        return Err(Error::Precondition("Killing form of μ is degenerate".into()));
    }
    let g = x.codomain();
    let gram = g.gram();
    let ideals = simple_ideals(&x, &DMatrix::identity(n, n))?;
    let mut theta_prime = DMatrix::zeros(n, n);
    let mut metric_residual: f64 = 0.0;
    for q in &ideals {
        let r = q.ncols();
        let sub = restrict(&x, q)?;
        let bi = killing_form(r, sub.mu());
        let ci = metric_constant(r, sub.mu());
        let phi_i = x.phi() * q;
        let f = phi_i.transpose() * gram * &phi_i;
        let ti = if f.trace() > 1e-10 {
            let fi = f.clone().try_inverse().ok_or_else(|| Error::IllConditioned("φ*φ on a factor".into()))?;
            fi * phi_i.transpose() * gram * g.involution() * &phi_i
        } else {
            let bi_inv = bi.clone().try_inverse().ok_or_else(|| Error::IllConditioned("factor Killing form".into()))?;
            -bi_inv / ci
        };
        metric_residual = metric_residual.max((DMatrix::identity(r, r) + ti.transpose() * &bi * ci).norm());
        theta_prime += q * ti * q.transpose();
    }
    let square_residual = (&theta_prime * &theta_prime - DMatrix::identity(n, n)).norm();
    let automorphism_residual = automorphism_residual(n, x.mu(), &theta_prime)?;
    let diff = g.involution() * x.phi() - x.phi() * &theta_prime;
    let intertwining_residual = (diff.transpose() * gram * &diff).trace().max(0.0).sqrt();
    let ok = square_residual <= tol
        && automorphism_residual <= tol
        && intertwining_residual <= tol
        && metric_residual <= tol;
    let report = MostowReport {
        theta_prime: row_vecs(&theta_prime),
        square_residual,
        automorphism_residual,
        intertwining_residual,
        metric_residual,
        factor_dims: ideals.iter().map(|q| q.ncols()).collect(),
        tolerance: tol,
        ok,
    };
    Ok((theta_prime, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct AbelianClassification {
    pub is_homothety: bool,
    pub image_commutes: bool,
    pub theta_invariant_envelope: bool,
    pub minimal: bool,
    pub energy: f64,
    pub homothety_residual: f64,
    pub commutator_residual: f64,
    pub envelope_residual: f64,
    /// The energy criterion agrees with the three structural flags.
    pub consistent: bool,
}

pub fn abelian_classify(p: &Pair) -> Result<AbelianClassification> {
    if p.mu().iter().any(|m| m.abs() > 1e-12) {
        return Err(Error::Precondition("μ must vanish".into()));
    }
    let x = p.normalized()?;
    let n = x.n();
    let g = x.codomain();
    let (_, homothety_residual) = homothety(&x, &DMatrix::identity(n, n));
    let cols: Vec<DVector<f64>> = x.phi().column_iter().map(|v| v.into_owned()).collect();
    let max_bracket = |vs: &[DVector<f64>]| {
        let mut w: f64 = 0.0;
        for a in vs {
            for b in vs {
                w = w.max(g.norm_sq(&g.bracket(a, b)).max(0.0).sqrt());
            }
        }
        w
    };
    let commutator_residual = max_bracket(&cols);
    let mut env = cols.clone();
    env.extend(cols.iter().map(|v| g.theta(v)));
    let envelope_residual = max_bracket(&env);
    let (energy, gap) = minimal_energy_gap(&x)?;
    let is_homothety = homothety_residual <= 1e-8;
    let image_commutes = commutator_residual <= 1e-8;
    let theta_invariant_envelope = envelope_residual <= 1e-8;
    let structural = is_homothety && image_commutes && theta_invariant_envelope;
    let by_energy = gap <= 1e-8;
    Ok(AbelianClassification {
        is_homothety,
        image_commutes,
        theta_invariant_envelope,
        minimal: by_energy && structural,
        energy,
        homothety_residual,
        commutator_residual,
        envelope_residual,
        consistent: by_energy == structural,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::flow::{kempf_ness_minimize, MinimizeOptions, Subgroup, Verdict};

    #[test]
    fn identity_su2_is_one_simple_factor() {
        let p = catalog::pair("identity-su2").unwrap();
        let r = minimal_decompose(&p, 1e-8).unwrap();
        assert_eq!(r.center_dim, 0);
        assert_eq!(r.factors.len(), 1);
        assert!((r.factors[0].energy - 1.0 / 3.0).abs() <= 1e-12);
        assert!(r.factors[0].homothety_residual <= 1e-12);
        assert!(r.phi_ad_commutator <= 1e-8);
        let (der, cz, n) = r.der_centralizer_dims.unwrap();
        assert_eq!(der, cz + n);
    }

    #[test]
    fn cartan_pair_is_center_only() {
        let p = catalog::pair("cartan-sl3").unwrap();
        let r = minimal_decompose(&p, 1e-8).unwrap();
        assert_eq!(r.center_dim, p.n());
        assert_eq!(r.factors.len(), 1);
        assert!(r.factors[0].homothety_residual <= 1e-8);
    }

    fn su2_plus_line() -> Pair {
        let g = Arc::new(catalog::algebra("su2+su2").unwrap());
        let su2 = catalog::pair("identity-su2").unwrap().normalized().unwrap();
        // energy 1/4 needs ‖p_1‖²/3 = ‖p_2‖²
        let n = 4;
        let mut mu = vec![0.0; n * n * n];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    mu[(i * n + j) * n + k] = su2.mu_at(i, j, k);
                }
            }
        }
        let mut phi = DMatrix::zeros(6, 4);
        phi.view_mut((0, 0), (3, 3)).copy_from(su2.phi());
        let t = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let scale = (1.0 / 3.0 / g.norm_sq(&t)).sqrt();
        phi.set_column(3, &(t * scale));
        Pair::new(g, n, mu, phi).unwrap()
    }

    #[test]
    fn product_pair_has_two_factors() {
        let p = su2_plus_line();
        let r = minimal_decompose(&p, 1e-8).unwrap();
        assert_eq!(r.center_dim, 1);
        let dims: Vec<usize> = r.factors.iter().map(|f| f.dim).collect();
        assert_eq!(dims, vec![1, 3]);
        assert!(r.image_orthogonality <= 1e-9);
        for f in &r.factors {
            assert!(f.energy_gap <= 1e-7, "{f:?}");
        }
    }

    #[test]
    fn gauge_su2_is_identity() {
        let p = catalog::pair("identity-su2").unwrap();
        let r = minimal_metric_gauge(3, p.mu(), &DMatrix::identity(3, 3)).unwrap();
        let g = &r.element.gl_part;
        assert!((g - DMatrix::identity(3, 3) * g[(0, 0)]).norm() <= 1e-12);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn gauge_sl2_is_not_scalar() {
        let alg = catalog::sl(2).unwrap();
        let theta = alg.involution().clone();
        let r = minimal_metric_gauge(3, alg.structure(), &theta).unwrap();
        let g = &r.element.gl_part;
        assert!((g - DMatrix::identity(3, 3) * g[(0, 0)]).norm() > 1e-3);
        assert!(r.residual <= 1e-9, "{}", r.residual);
        let tp = DMatrix::from_fn(3, 3, |i, j| r.theta_prime[i][j]);
        let again = minimal_metric_gauge(3, &r.mu_prime, &tp).unwrap();
        assert!((again.element.gl_part - DMatrix::identity(3, 3)).norm() <= 1e-9);
    }

    #[test]
    fn gauge_rejects_non_cartan() {
        let alg = catalog::sl(2).unwrap();
        assert!(minimal_metric_gauge(3, alg.structure(), &DMatrix::identity(3, 3)).is_err());
        let mut flip = DMatrix::identity(3, 3);
        flip[(0, 0)] = -1.0;
        assert!(minimal_metric_gauge(3, alg.structure(), &flip).is_err());
    }

    #[test]
    fn mostow_on_identity_su2() {
        let p = catalog::pair("identity-su2").unwrap();
        let (t, r) = mostow_involution(&p, 1e-6).unwrap();
        assert!((t - DMatrix::identity(3, 3)).norm() <= 1e-12);
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn mostow_rejects_non_minimal() {
        let p = catalog::pair("principal-sl3").unwrap();
        assert!(mostow_involution(&p, 1e-6).is_err());
    }

    #[test]
    fn mostow_after_kempf_ness() {
        let p = catalog::pair("principal-sl3").unwrap();
        let r = kempf_ness_minimize(&p, Subgroup::Det1, &MinimizeOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::PolystableCandidate);
        let (_, m) = mostow_involution(&r.minimizer, 1e-6).unwrap();
        assert!(m.intertwining_residual <= 1e-6, "{m:?}");
        assert!(m.ok, "{m:?}");
    }

    #[test]
    fn abelian_flags() {
        let c = abelian_classify(&catalog::pair("cartan-line-sl2").unwrap()).unwrap();
        assert!(c.is_homothety && c.image_commutes && c.theta_invariant_envelope && c.minimal && c.consistent);
        let nl = abelian_classify(&catalog::pair("nilpotent-line-sl2").unwrap()).unwrap();
        assert!(nl.is_homothety && !nl.theta_invariant_envelope && !nl.minimal && nl.consistent);
        let alg = Arc::new(catalog::sl(2).unwrap());
        assert!(matches!(abelian_classify(&Pair::zero(alg, 1)), Err(Error::ZeroPair)));
        assert!(abelian_classify(&catalog::pair("identity-su2").unwrap()).is_err());
    }
}
