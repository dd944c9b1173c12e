//! Structure of critical pairs: criticality, spectra and gradations,
//! decompositions, extensions and the minimal stratum.

mod criticality;
mod extension;
mod levi;
mod minimal;
mod spectrum;

pub use criticality::*;
pub use extension::*;
pub use levi::*;
pub use minimal::*;
pub use spectrum::*;
