//! Built-in algebras and pairs.
//!
//! Algebra names: `sl2`, `sl3`, ... (an optional trailing `R` or the form
//! `sl(3,R)` is accepted), `su2`, `so3`, products `a+b`, and `gc2(sl2)` for the
//! generalized codomain `gl(2) ⊕ sl(2)`.
//!
//! Basis of `sl(m)`: `H_1..H_{m-1}` with `H_i = E_ii - E_{i+1,i+1}`, then the
//! upper root vectors `E_ij` (i<j) in lexicographic order, then the lower ones
//! `E_ji` in the same order. For `sl(2)` this is `{H, E, F}`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{QuadraticLieAlgebra, Subspace};
use crate::error::{Error, Result};
use crate::pairs::Pair;

pub const ALGEBRA_NAMES: &[&str] = &["sl2", "sl3", "sl4", "su2", "so3", "su2+su2", "gc2(sl2)"];

pub const PAIR_NAMES: &[&str] = &[
    "identity-su2",
    "identity-sl2",
    "inclusion-su2",
    "cartan-line-sl2",
    "cartan-sl3",
    "nilpotent-line-sl2",
    "heisenberg-sl3",
    "borel-sl2",
    "borel-sl3",
    "principal-sl3",
];

/// Index of `E_ij` (i ≠ j) in the basis of `sl(m)`.
pub fn sl_root_index(m: usize, i: usize, j: usize) -> usize {
    assert!(i != j && i < m && j < m);
    let upper = m * (m - 1) / 2;
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    // position of (a, b) among pairs a<b in lexicographic order
    let pos = a * m - a * (a + 1) / 2 + (b - a - 1);
    if i < j {
        (m - 1) + pos
    } else {
        (m - 1) + upper + pos
    }
}

/// The `m × m` matrix of the `idx`-th basis vector of `sl(m)`.
pub fn sl_basis_matrix(m: usize, idx: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(m, m);
    if idx < m - 1 {
        x[(idx, idx)] = 1.0;
        x[(idx + 1, idx + 1)] = -1.0;
        return x;
    }
    for i in 0..m {
        for j in 0..m {
            if i != j && sl_root_index(m, i, j) == idx {
                x[(i, j)] = 1.0;
                return x;
            }
        }
    }
    panic!("basis index {idx} out of range for sl({m})");
}

/// Coordinates of a traceless matrix in the basis of `sl(m)`.
pub fn sl_coordinates(x: &DMatrix<f64>) -> DVector<f64> {
    let m = x.nrows();
    let mut c = DVector::zeros(m * m - 1);
    let mut acc = 0.0;
    for k in 0..m - 1 {
        acc += x[(k, k)];
        c[k] = acc;
    }
    for i in 0..m {
        for j in 0..m {
            if i != j {
                c[sl_root_index(m, i, j)] = x[(i, j)];
            }
        }
    }
    c
}

/// `sl(m, ℝ)` with the Killing form, `θX = -Xᵀ` and the diagonal Cartan subalgebra.
pub fn sl(m: usize) -> Result<QuadraticLieAlgebra> {
    if m < 2 {
        return Err(Error::UnknownName(format!("sl{m}")));
    }
    let d = m * m - 1;
    let mats: Vec<DMatrix<f64>> = (0..d).map(|i| sl_basis_matrix(m, i)).collect();
    let mut c = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            let br = &mats[i] * &mats[j] - &mats[j] * &mats[i];
            let coords = sl_coordinates(&br);
            for k in 0..d {
                c[(i * d + j) * d + k] = coords[k];
            }
        }
    }
    let mut theta = DMatrix::zeros(d, d);
    for (i, x) in mats.iter().enumerate() {
        theta.set_column(i, &sl_coordinates(&-x.transpose()));
    }
    let mut cartan = DMatrix::zeros(d, m - 1);
    for i in 0..m - 1 {
        cartan[(i, i)] = 1.0;
    }
    Ok(QuadraticLieAlgebra::with_killing_form(format!("sl{m}"), d, c, theta)?.with_cartan(Subspace::new(cartan)?))
}

fn cyclic_so3(label: &str) -> QuadraticLieAlgebra {
    let mut c = vec![0.0; 27];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        c[(i * 3 + j) * 3 + k] = 1.0;
        c[(j * 3 + i) * 3 + k] = -1.0;
    }
    let cartan = Subspace::new(DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0])).expect("nonzero");
    QuadraticLieAlgebra::with_killing_form(label, 3, c, DMatrix::identity(3, 3))
        .expect("static shapes")
        .with_cartan(cartan)
}

/// `su(2)` with `[e1,e2] = e3` cyclic; compact, so `θ = id` and `B = -2·I`.
pub fn su2() -> QuadraticLieAlgebra {
    cyclic_so3("su2")
}

/// `so(3)` in the rotation-generator basis `L_x, L_y, L_z`.
pub fn so3() -> QuadraticLieAlgebra {
    cyclic_so3("so3")
}

/// The generalized codomain `gc_n(g) = gl(n) ⊕ g` with
/// `β̃((A,v),(B,w)) = tr(AB) + β(v,w)` and `θ̃(A,v) = (-Aᵀ, θv)`.
/// Basis: `E_ab` row-major, then the basis of `g`.
pub fn gc(n: usize, g: &QuadraticLieAlgebra) -> Result<QuadraticLieAlgebra> {
    if g.gram_sqrt().is_err() {
        return Err(Error::InvalidAlgebra(format!("gc over non-validated algebra {}", g.label())));
    }
    let dg = g.dim();
    let nn = n * n;
    let d = nn + dg;
    let mut c = vec![0.0; d * d * d];
    // [E_ab, E_cd] = δ_bc E_ad − δ_da E_cb
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                for dd in 0..n {
                    let i = a * n + b;
                    let j = cc * n + dd;
                    if b == cc {
                        c[(i * d + j) * d + a * n + dd] += 1.0;
                    }
                    if dd == a {
                        c[(i * d + j) * d + cc * n + b] -= 1.0;
                    }
                }
            }
        }
    }
    for i in 0..dg {
        for j in 0..dg {
            for k in 0..dg {
                c[((nn + i) * d + nn + j) * d + nn + k] = g.c(i, j, k);
            }
        }
    }
    let mut form = DMatrix::zeros(d, d);
    let mut theta = DMatrix::zeros(d, d);
    for a in 0..n {
        for b in 0..n {
            // tr(E_ab E_cd) = δ_bc δ_ad
            form[(a * n + b, b * n + a)] = 1.0;
            theta[(b * n + a, a * n + b)] = -1.0;
        }
    }
    form.view_mut((nn, nn), (dg, dg)).copy_from(g.form());
    theta.view_mut((nn, nn), (dg, dg)).copy_from(g.involution());
    let alg = QuadraticLieAlgebra::new(format!("gc{n}({})", g.label()), d, c, form, theta)?;
    Ok(match g.cartan() {
        Some(t) => {
            let mut basis = DMatrix::zeros(d, n + t.dim());
            for a in 0..n {
                basis[(a * n + a, a)] = 1.0;
            }
            basis.view_mut((nn, n), (dg, t.dim())).copy_from(t.basis());
            alg.with_cartan(Subspace::new(basis)?)
        }
        None => alg,
    })
}

fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Resolves a catalog algebra name.
pub fn algebra(name: &str) -> Result<QuadraticLieAlgebra> {
    let norm: String = name.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase().replace('ℝ', "r");
    let parts = split_top_level(&norm, '+');
    if parts.len() > 1 {
        let mut acc = algebra(parts[0])?;
        for p in &parts[1..] {
            acc = acc.direct_sum(&algebra(p)?)?;
        }
        return Ok(acc);
    }
    let s = norm.as_str();
    if let Some(rest) = s.strip_prefix("gc") {
        // gc2(sl2) or gc(2,sl2)
        let unknown = || Error::UnknownName(name.to_string());
        let (n, inner) = if let Some(body) = rest.strip_prefix('(') {
            let body = body.strip_suffix(')').ok_or_else(unknown)?;
            let (n, inner) = body.split_once(',').ok_or_else(unknown)?;
            (n, inner)
        } else {
            let open = rest.find('(').ok_or_else(unknown)?;
            let inner = rest[open + 1..].strip_suffix(')').ok_or_else(unknown)?;
            (&rest[..open], inner)
        };
        let n: usize = n.parse().map_err(|_| unknown())?;
        return gc(n, &algebra(inner)?);
    }
    match s {
        "su2" | "su(2)" => return Ok(su2()),
        "so3" | "so(3)" => return Ok(so3()),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("sl") {
        let digits: String = rest.chars().filter(|c| c.is_ascii_digit()).collect();
        let shape_ok =
            rest.trim_start_matches('(').trim_end_matches(')').trim_end_matches(",r").trim_end_matches('r') == digits;
        if shape_ok {
            if let Ok(m) = digits.parse::<usize>() {
                return sl(m);
            }
        }
    }
    Err(Error::UnknownName(name.to_string()))
}

/// Pair on the subalgebra spanned by the columns of `basis` (coordinates in `alg`),
/// with the inclusion as homomorphism. The columns are Gram–Schmidt orthonormalized
/// in order, so the inclusion is isometric; the span must be closed under the bracket.
pub fn inclusion_pair(alg: Arc<QuadraticLieAlgebra>, basis: &DMatrix<f64>) -> Result<Pair> {
    let n = basis.ncols();
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = basis.column(j).into_owned();
        for q in &ortho {
            let c = alg.inner(q, &v);
            v -= q * c;
        }
        let nrm = alg.norm_sq(&v).sqrt();
        if nrm < 1e-12 {
            return Err(Error::InvalidPair("inclusion basis is linearly dependent".into()));
        }
        ortho.push(v / nrm);
    }
    let mut mu = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            let br = alg.bracket(&ortho[i], &ortho[j]);
            for k in 0..n {
                let c = alg.inner(&br, &ortho[k]);
                mu[(i * n + j) * n + k] = if c.abs() <= 1e-14 { 0.0 } else { c };
            }
        }
    }
    let phi = crate::linalg::columns(alg.dim(), &ortho);
    let pair = Pair::new(alg, n, mu, phi)?;
    let (_, hom) = pair.residuals();
    if hom > 1e-10 {
        return Err(Error::InvalidPair(format!("span is not a subalgebra (residual {hom:e})")));
    }
    Ok(pair)
}

/// `(μ_g, id)`: the algebra's own bracket with the identity homomorphism.
pub fn identity_pair(alg: Arc<QuadraticLieAlgebra>) -> Result<Pair> {
    let d = alg.dim();
    let mu = alg.structure().to_vec();
    Pair::new(alg, d, mu, DMatrix::identity(d, d))
}

fn cols(d: usize, vs: &[Vec<(usize, f64)>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, vs.len());
    for (j, v) in vs.iter().enumerate() {
        for &(i, x) in v {
            m[(i, j)] += x;
        }
    }
    m
}

/// Resolves a catalog pair name.
pub fn pair(name: &str) -> Result<Pair> {
    let key = name.trim().to_lowercase();
    match key.as_str() {
        "identity-su2" => identity_pair(Arc::new(su2())),
        "identity-sl2" => identity_pair(Arc::new(sl(2)?)),
        "inclusion-su2" => {
            let g = Arc::new(su2());
            inclusion_pair(g, &DMatrix::identity(3, 3))
        }
        "cartan-line-sl2" => {
            let g = Arc::new(sl(2)?);
            inclusion_pair(g, &cols(3, &[vec![(0, 1.0)]]))
        }
        "cartan-sl3" => {
            let g = Arc::new(sl(3)?);
            inclusion_pair(g, &cols(8, &[vec![(0, 1.0)], vec![(1, 1.0)]]))
        }
        "nilpotent-line-sl2" => {
            let g = Arc::new(sl(2)?);
            Pair::new(g, 1, vec![0.0], cols(3, &[vec![(1, 1.0)]]))
        }
        "heisenberg-sl3" => {
            let g = Arc::new(sl(3)?);
            let e = |i, j| vec![(sl_root_index(3, i, j), 1.0)];
            inclusion_pair(g, &cols(8, &[e(0, 1), e(1, 2), e(0, 2)]))
        }
        "borel-sl2" => {
            let g = Arc::new(sl(2)?);
            inclusion_pair(g, &cols(3, &[vec![(0, 1.0)], vec![(1, 1.0)]]))
        }
        "borel-sl3" => {
            let g = Arc::new(sl(3)?);
            let e = |i, j| vec![(sl_root_index(3, i, j), 1.0)];
            inclusion_pair(g, &cols(8, &[vec![(0, 1.0)], vec![(1, 1.0)], e(0, 1), e(1, 2), e(0, 2)]))
        }
        "principal-sl3" => {
            let g = Arc::new(sl(3)?);
            let s = sl(2)?;
            let r = |i, j| sl_root_index(3, i, j);
            let phi = cols(
                8,
                &[vec![(0, 2.0), (1, 2.0)], vec![(r(0, 1), 1.0), (r(1, 2), 1.0)], vec![(r(1, 0), 2.0), (r(2, 1), 2.0)]],
            );
            Pair::new(g, 3, s.structure().to_vec(), phi)
        }
        _ => Err(Error::UnknownName(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{killing_form, validate_algebra};

    #[test]
    fn sl_basis_order() {
        assert_eq!(sl_root_index(2, 0, 1), 1);
        assert_eq!(sl_root_index(2, 1, 0), 2);
        assert_eq!(sl_root_index(3, 0, 1), 2);
        assert_eq!(sl_root_index(3, 0, 2), 3);
        assert_eq!(sl_root_index(3, 1, 2), 4);
        assert_eq!(sl_root_index(3, 1, 0), 5);
        assert_eq!(sl_root_index(3, 2, 1), 7);
        for m in 2..5 {
            for idx in 0..m * m - 1 {
                let x = sl_basis_matrix(m, idx);
                let c = sl_coordinates(&x);
                assert_eq!(c, {
                    let mut e = DVector::zeros(m * m - 1);
                    e[idx] = 1.0;
                    e
                });
            }
        }
    }

    #[test]
    fn sl2_structure() {
        let g = sl(2).unwrap();
        let (h, e, f) = (g.basis_vector(0), g.basis_vector(1), g.basis_vector(2));
        assert_eq!(g.bracket(&h, &e), &e * 2.0);
        assert_eq!(g.bracket(&h, &f), &f * -2.0);
        assert_eq!(g.bracket(&e, &f), h);
    }

    #[test]
    fn catalog_algebras_validate() {
        for name in ALGEBRA_NAMES {
            let g = algebra(name).unwrap();
            let r = validate_algebra(&g, 1e-10);
            assert!(r.ok, "{name}: {r:?}");
        }
    }

    #[test]
    fn sl_killing_is_2m_trace() {
        for m in 2..5 {
            let g = sl(m).unwrap();
            let d = m * m - 1;
            for i in 0..d {
                for j in 0..d {
                    let x = sl_basis_matrix(m, i);
                    let y = sl_basis_matrix(m, j);
                    let expected = 2.0 * m as f64 * (x * y).trace();
                    assert!((g.form()[(i, j)] - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gc_over_sl2() {
        let g = sl(2).unwrap();
        let gcg = gc(2, &g).unwrap();
        assert_eq!(gcg.dim(), 7);
        let gram = gcg.gram();
        assert!((gram.view((0, 0), (4, 4)).into_owned() - DMatrix::identity(4, 4)).norm() < 1e-15);
        assert!((gram.view((4, 4), (3, 3)).into_owned() - g.gram()).norm() < 1e-15);
        assert!(gram.view((0, 4), (4, 3)).norm() == 0.0);
        // form is not the Killing form of gc
        assert!((killing_form(7, gcg.structure()) - gcg.form()).norm() > 1.0);
        assert!(validate_algebra(&gcg, 1e-10).ok);
    }

    #[test]
    fn product_killing_is_direct_sum() {
        let p = algebra("su2+su2").unwrap();
        assert_eq!(p.dim(), 6);
        let k = killing_form(6, p.structure());
        assert_eq!(k, DMatrix::identity(6, 6) * -2.0);
        assert_eq!(&k, p.form());
    }

    #[test]
    fn name_variants() {
        for n in ["sl2", "sl2R", "sl(2,R)", "SL(2,ℝ)", "sl 2"] {
            assert_eq!(algebra(n).unwrap().dim(), 3, "{n}");
        }
        assert_eq!(algebra("gc(2,sl2)").unwrap().dim(), 7);
        assert_eq!(algebra("gc3(sl3)").unwrap().dim(), 17);
        assert_eq!(algebra("sl2+su2+so3").unwrap().dim(), 9);
        assert!(matches!(algebra("e8"), Err(Error::UnknownName(_))));
        assert!(matches!(algebra("sl2x"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn catalog_pairs_are_in_the_variety() {
        for name in PAIR_NAMES {
            let p = pair(name).unwrap();
            let (j, h) = p.residuals();
            assert!(j < 1e-12 && h < 1e-12, "{name}: {j} {h}");
        }
    }
}
