//! Algebra and pair files, and the canonical JSON layout shared with reports.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{killing_form, QuadraticLieAlgebra, Subspace};
use crate::catalog;
use crate::error::{Error, Result};
use crate::pairs::Pair;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub name: String,
    pub dim: usize,
    pub structure_constants: Vec<(usize, usize, usize, f64)>,
    pub form: FormSpec,
    pub involution: Vec<Vec<f64>>,
    /// Basis vectors of a Cartan subalgebra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cartan: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraSpec {
    Name(String),
    Inline(AlgebraFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairFile {
    #[serde(default = "yes")]
    pub in_variety: bool,
    pub n: usize,
    pub algebra: AlgebraSpec,
    pub mu: Vec<(usize, usize, usize, f64)>,
    /// `dim g` rows, `n` columns.
    pub phi: Vec<Vec<f64>>,
}

fn yes() -> bool {
    true
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Quadruples `[i,j,k,c]` with `i<j` and `c ≠ 0`.
fn upper_quadruples(d: usize, full: &[f64]) -> Vec<(usize, usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            for k in 0..d {
                let c = full[(i * d + j) * d + k];
                if c != 0.0 {
                    out.push((i, j, k, c));
                }
            }
        }
    }
    out
}

/// Completes quadruples to a full antisymmetric tensor; `[j,i,k,−c]` is
/// accepted alongside `[i,j,k,c]`, anything else inconsistent is rejected.
fn complete(d: usize, quads: &[(usize, usize, usize, f64)]) -> Result<Vec<f64>> {
    let mut full = vec![0.0; d * d * d];
    let mut seen = vec![false; d * d * d];
    for &(i, j, k, c) in quads {
        if i >= d || j >= d || k >= d {
            return Err(Error::Format(format!("index ({i},{j},{k}) out of range for dimension {d}")));
        }
        if i == j {
            if c != 0.0 {
                return Err(Error::Format(format!("entry [{i},{i},{k}] = {c} breaks antisymmetry")));
            }
            continue;
        }
        let (a, b, v) = if i < j { (i, j, c) } else { (j, i, -c) };
        let at = (a * d + b) * d + k;
        if seen[at] && full[at] != v {
            return Err(Error::Format(format!("conflicting entries for [{a},{b},{k}]: tensor is not antisymmetric")));
        }
        seen[at] = true;
        full[at] = v;
        full[(b * d + a) * d + k] = -v;
    }
    Ok(full)
}

pub fn algebra_to_file(alg: &QuadraticLieAlgebra) -> AlgebraFile {
    let d = alg.dim();
    let form = if killing_form(d, alg.structure()) == *alg.form() {
        FormSpec::Named("killing".into())
    } else {
        FormSpec::Matrix(rows(alg.form()))
    };
    AlgebraFile {
        name: alg.label().to_string(),
        dim: d,
        structure_constants: upper_quadruples(d, alg.structure()),
        form,
        involution: rows(alg.involution()),
        cartan: alg.cartan().map(|t| t.basis().column_iter().map(|c| c.iter().copied().collect()).collect()),
    }
}

pub fn algebra_from_file(f: &AlgebraFile) -> Result<QuadraticLieAlgebra> {
    let d = f.dim;
    let c = complete(d, &f.structure_constants)?;
    let form = match &f.form {
        FormSpec::Named(s) if s == "killing" => killing_form(d, &c),
        FormSpec::Named(s) => return Err(Error::Format(format!("unknown form `{s}`"))),
        FormSpec::Matrix(m) => matrix(m, d, d, "form")?,
    };
    let theta = matrix(&f.involution, d, d, "involution")?;
    let alg = QuadraticLieAlgebra::new(f.name.clone(), d, c, form, theta)?;
    Ok(match &f.cartan {
        Some(vs) => {
            let b = matrix(vs, vs.len(), d, "cartan")?.transpose();
            alg.with_cartan(Subspace::new(b)?)
        }
        None => alg,
    })
}

fn same_algebra(a: &QuadraticLieAlgebra, b: &QuadraticLieAlgebra) -> bool {
    a.dim() == b.dim()
        && a.structure() == b.structure()
        && a.form() == b.form()
        && a.involution() == b.involution()
        && a.cartan() == b.cartan()
}

pub fn pair_to_file(p: &Pair, in_variety: bool) -> PairFile {
    let g = p.codomain();
    let algebra = match catalog::algebra(g.label()) {
        Ok(c) if same_algebra(&c, g) => AlgebraSpec::Name(g.label().to_string()),
        _ => AlgebraSpec::Inline(algebra_to_file(g)),
    };
    PairFile { in_variety, n: p.n(), algebra, mu: upper_quadruples(p.n(), p.mu()), phi: rows(p.phi()) }
}

pub fn pair_from_file(f: &PairFile) -> Result<Pair> {
    let g = match &f.algebra {
        AlgebraSpec::Name(s) => catalog::algebra(s)?,
        AlgebraSpec::Inline(a) => algebra_from_file(a)?,
    };
    let mu = complete(f.n, &f.mu)?;
    let phi = matrix(&f.phi, g.dim(), f.n, "phi")?;
    Pair::new(Arc::new(g), f.n, mu, phi)
}

pub fn read_algebra(text: &str) -> Result<QuadraticLieAlgebra> {
    algebra_from_file(&serde_json::from_str(text)?)
}

pub fn read_pair(text: &str) -> Result<(Pair, bool)> {
    let f: PairFile = serde_json::from_str(text)?;
    Ok((pair_from_file(&f)?, f.in_variety))
}

pub fn write_algebra(alg: &QuadraticLieAlgebra) -> Result<String> {
    to_canonical_string(&algebra_to_file(alg))
}

pub fn write_pair(p: &Pair, in_variety: bool) -> Result<String> {
    to_canonical_string(&pair_to_file(p, in_variety))
}

/// JSON with sorted keys, two-space indentation and arrays of scalars on one line.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) -> Result<()> {
    let pad = |n: usize| " ".repeat(n);
    match v {
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&serde_json::to_string(x)?);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 2));
                write_value(x, indent + 2, out)?;
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            let len = map.len();
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 2));
                out.push_str(&serde_json::to_string(k)?);
                out.push_str(": ");
                write_value(x, indent + 2, out)?;
                out.push_str(if i + 1 < len { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        scalar => out.push_str(&serde_json::to_string(scalar)?),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_pairs_round_trip() {
        for name in catalog::PAIR_NAMES {
            let p = catalog::pair(name).unwrap();
            let text = write_pair(&p, true).unwrap();
            let (q, flag) = read_pair(&text).unwrap();
            assert!(flag);
            assert_eq!(write_pair(&q, true).unwrap(), text, "{name}");
            assert_eq!(q.mu(), p.mu());
            assert_eq!(q.phi(), p.phi());
        }
    }

    #[test]
    fn catalog_algebras_round_trip() {
        for name in catalog::ALGEBRA_NAMES {
            let a = catalog::algebra(name).unwrap();
            let text = write_algebra(&a).unwrap();
            let b = read_algebra(&text).unwrap();
            assert_eq!(write_algebra(&b).unwrap(), text, "{name}");
        }
    }

    #[test]
    fn named_codomain_is_referenced() {
        let p = catalog::pair("heisenberg-sl3").unwrap();
        let f = pair_to_file(&p, true);
        assert!(matches!(f.algebra, AlgebraSpec::Name(ref s) if s == "sl3"));
    }

    #[test]
    fn rejects_non_antisymmetric_tensor() {
        let text = r#"{"name":"bad","dim":2,"structure_constants":[[0,1,1,1.0],[1,0,1,1.0]],
            "form":[[1,0],[0,1]],"involution":[[1,0],[0,1]]}"#;
        assert!(matches!(read_algebra(text), Err(Error::Format(_))));
        let text = r#"{"name":"bad","dim":2,"structure_constants":[[0,0,1,1.0]],
            "form":[[1,0],[0,1]],"involution":[[1,0],[0,1]]}"#;
        assert!(matches!(read_algebra(text), Err(Error::Format(_))));
    }

    #[test]
    fn accepts_consistent_lower_entries() {
        let text = r#"{"n":2,"algebra":"sl2","mu":[[1,0,1,-1.0]],"phi":[[0,0],[0,0],[0,0]]}"#;
        let (p, flag) = read_pair(text).unwrap();
        assert!(flag);
        assert_eq!(p.mu_at(0, 1, 1), 1.0);
        assert_eq!(p.mu_at(1, 0, 1), -1.0);
    }

    #[test]
    fn canonical_layout() {
        let s = to_canonical_string(&serde_json::json!({"b": [1, 2], "a": {"m": [[1.0, 0.5]]}})).unwrap();
        assert_eq!(s, "{\n  \"a\": {\n    \"m\": [\n      [1.0, 0.5]\n    ]\n  },\n  \"b\": [1, 2]\n}\n");
    }
}
