//! Seeded generators of test pairs.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::QuadraticLieAlgebra;
use crate::catalog;
use crate::error::{Error, Result};
use crate::pairs::{group_act, GroupElement, Pair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomMode {
    /// `μ = 0` and `φ` with image in a randomly conjugated Cartan subalgebra.
    Abelian,
    /// A catalog subalgebra inclusion moved by a random isometry.
    Subalgebra,
    /// A catalog pair moved by `exp` of a random `gc_n` element.
    OrbitPerturb,
    /// Gaussian point of `V_n(g)`; no membership claim.
    Ambient,
}

impl RandomMode {
    pub fn in_variety(self) -> bool {
        self != RandomMode::Ambient
    }

    pub fn name(self) -> &'static str {
        match self {
            RandomMode::Abelian => "abelian",
            RandomMode::Subalgebra => "subalgebra",
            RandomMode::OrbitPerturb => "orbit-perturb",
            RandomMode::Ambient => "ambient",
        }
    }
}

impl FromStr for RandomMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abelian" => Ok(RandomMode::Abelian),
            "subalgebra" => Ok(RandomMode::Subalgebra),
            "orbit-perturb" => Ok(RandomMode::OrbitPerturb),
            "ambient" => Ok(RandomMode::Ambient),
            _ => Err(Error::UnknownName(s.to_string())),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut impl Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random `(exp K, exp ad_w)` with `K` antisymmetric and `w ∈ k`: an isometry of `V_n(g)`.
pub fn random_orthogonal(rng: &mut impl Rng, alg: &QuadraticLieAlgebra, n: usize) -> Result<GroupElement> {
    let a = gaussian_matrix(rng, n, n);
    let k = (&a - a.transpose()) * 0.5;
    let kb = alg.k_basis()?;
    let w = &kb * gaussian_vector(rng, kb.ncols());
    Ok(GroupElement::exp(alg, &k, &w))
}

/// Random `exp(s·(A, v))` with Gaussian `A` and `v`.
pub fn random_group_element(rng: &mut impl Rng, alg: &QuadraticLieAlgebra, n: usize, scale: f64) -> GroupElement {
    let a = gaussian_matrix(rng, n, n) * scale;
    let gs = alg.gram_inv_sqrt().cloned().unwrap_or_else(|_| DMatrix::identity(alg.dim(), alg.dim()));
    let v = gs * gaussian_vector(rng, alg.dim()) * scale;
    GroupElement::exp(alg, &a, &v)
}

fn catalog_pairs_for(alg: &QuadraticLieAlgebra, n: Option<usize>) -> Vec<Pair> {
    catalog::PAIR_NAMES
        .iter()
        .filter_map(|name| catalog::pair(name).ok())
        .filter(|p| p.codomain().label() == alg.label() && n.is_none_or(|n| p.n() == n))
        .collect()
}

/// Generates a pair in the given mode. `base` overrides the catalog choice for
/// `subalgebra` and `orbit-perturb`.
pub fn random_pair(
    mode: RandomMode,
    alg: Arc<QuadraticLieAlgebra>,
    n: usize,
    seed: u64,
    base: Option<&Pair>,
) -> Result<Pair> {
    let mut rng = rng(seed);
    let d = alg.dim();
    match mode {
        RandomMode::Ambient => {
            let mut mu = vec![0.0; n * n * n];
            for i in 0..n {
                for j in i + 1..n {
                    for k in 0..n {
                        let x: f64 = rng.sample(StandardNormal);
                        mu[(i * n + j) * n + k] = x;
                        mu[(j * n + i) * n + k] = -x;
                    }
                }
            }
            Pair::new(alg.clone(), n, mu, gaussian_matrix(&mut rng, d, n))
        }
        RandomMode::Abelian => {
            let t = alg
                .cartan()
                .ok_or_else(|| Error::Precondition(format!("{} has no catalog Cartan subalgebra", alg.label())))?
                .basis()
                .clone();
            let coeffs = gaussian_matrix(&mut rng, t.ncols(), n);
            let kb = alg.k_basis()?;
            let w = &kb * gaussian_vector(&mut rng, kb.ncols());
            let h = crate::linalg::expm(&alg.adjoint(&w));
            let phi = h * t * coeffs;
            Pair::new(alg.clone(), n, vec![0.0; n * n * n], phi)
        }
        RandomMode::Subalgebra | RandomMode::OrbitPerturb => {
            let start = match base {
                Some(b) => b.with_codomain(alg.clone())?,
                None => {
                    let mut cands = catalog_pairs_for(&alg, Some(n));
                    if cands.is_empty() {
                        return Err(Error::Precondition(format!(
                            "no catalog pair of dimension {n} into {}",
                            alg.label()
                        )));
                    }
                    let i = rng.random_range(0..cands.len());
                    cands.swap_remove(i)
                }
            };
            let m = start.n();
            let g = if mode == RandomMode::Subalgebra {
                random_orthogonal(&mut rng, &alg, m)?
            } else {
                random_group_element(&mut rng, &alg, m, 0.5)
            };
            group_act(&g, &start)
        }
    }
}
