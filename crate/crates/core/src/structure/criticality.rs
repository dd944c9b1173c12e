use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::Result;
use crate::linalg;
use crate::moment::moment_explicit;
use crate::pairs::{derivation_space, gc_coords, pair_adjoint, Pair};

/// Kernel cutoff used when computing `der(μ,φ)` inside the structure routines.
pub const DER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct CriticalityReport {
    /// Distance from `(D,u)` to `der(μ,φ)` relative to `‖(D,u)‖`.
    pub projection_residual: f64,
    pub is_critical: bool,
    pub tolerance: f64,
    pub energy: f64,
    pub d_spectrum: Vec<f64>,
    pub d_min_eig: f64,
    pub der_dim: usize,
}

/// Whether `(D,u)` lies in `der(μ,φ)`, measured at the unit representative.
pub fn criticality_test(p: &Pair, tol: f64) -> Result<CriticalityReport> {
    let x = p.normalized()?;
    let mv = moment_explicit(&x)?;
    let ds = derivation_space(&x, DER_TOL)?;
    let g = x.codomain();
    let w = gc_coords(&mv.d, &(g.gram_sqrt()? * &mv.u));
    let q = ds.orthonormal_matrix(g)?;
    // (D,u) at roundoff level is the zero element.
    let wn = w.norm();
    let floor = 1e-12 * mv.k;
    let projection_residual = if wn <= floor {
        0.0
    } else if q.ncols() == 0 {
        1.0
    } else {
        (&w - &q * (q.transpose() * &w)).norm() / wn
    };
    let (d_spectrum, _) = linalg::sym_eigen(&mv.d);
    let d_min_eig = d_spectrum.first().copied().unwrap_or(0.0);
    Ok(CriticalityReport {
        projection_residual,
        is_critical: projection_residual <= tol,
        tolerance: tol,
        energy: mv.energy,
        d_spectrum,
        d_min_eig,
        der_dim: ds.dim(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PsdReport {
    pub min_eig: f64,
    pub spectrum: Vec<f64>,
    /// Kernel eigenvectors `X` of `D` with `ad^{μ,φ}_X ≈ 0`; these must not exist.
    pub violations: Vec<Vec<f64>>,
}

/// Spectrum of `D` at the unit representative, plus the check that no
/// `X ∈ ker D` has vanishing `(ad^μ_X, φX)`.
pub fn psd_check(p: &Pair) -> Result<PsdReport> {
    let x = p.normalized()?;
    let mv = moment_explicit(&x)?;
    let (spectrum, vecs) = linalg::sym_eigen(&mv.d);
    let scale = mv.d.norm().max(mv.k).max(1e-300);
    let mut violations = Vec::new();
    for (i, &lam) in spectrum.iter().enumerate() {
        if lam.abs() > 1e-8 * scale {
            continue;
        }
        let v: DVector<f64> = vecs.column(i).into_owned();
        let (a, w) = pair_adjoint(&x, &v);
        let nrm = (a.norm_squared() + x.codomain().norm_sq(&w)).sqrt();
        if nrm <= 1e-8 {
            violations.push(v.iter().copied().collect());
        }
    }
    Ok(PsdReport { min_eig: spectrum.first().copied().unwrap_or(0.0), spectrum, violations })
}

/// `‖[D, φ*φ]‖_F` relative to `‖D‖·‖φ*φ‖` at the unit representative.
pub fn d_phi_commutator(p: &Pair) -> Result<f64> {
    let x = p.normalized()?;
    let mv = moment_explicit(&x)?;
    let f = x.phi_star_phi();
    let c: DMatrix<f64> = &mv.d * &f - &f * &mv.d;
    let scale = (mv.d.norm() * f.norm()).max(1e-300);
    Ok(c.norm() / scale)
}
