use clap::ValueEnum;
use serde::Serialize;

/// Default tolerance set, selected by `--profile` or `LIEPAIR_PROFILE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Strict,
    Default,
    Loose,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Relative Jacobi and homomorphism residual accepted for variety points.
    pub residual: f64,
    /// Relative residual for algebra validation.
    pub algebra: f64,
    /// Projection residual for criticality.
    pub critical: f64,
    /// Structure checks: Levi splitting, minimal decomposition, Mostow, gauge.
    pub structure: f64,
}

impl Profile {
    pub fn tolerances(self) -> Tolerances {
        let s = match self {
            Profile::Strict => 1e-2,
            Profile::Default => 1.0,
            Profile::Loose => 1e2,
        };
        Tolerances { residual: 1e-9 * s, algebra: 1e-10 * s, critical: 1e-8 * s, structure: 1e-6 * s }
    }
}
