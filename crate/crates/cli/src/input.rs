use std::path::Path;
use std::sync::Arc;

use liepair_core::random::random_pair;
use liepair_core::{catalog, io, Pair, RandomMode};
use serde_json::{json, Value};

use crate::args::Source;
use crate::commands::{CliError, CliResult};

pub struct Loaded {
    pub pair: Pair,
    pub in_variety: bool,
    /// How the pair was obtained, echoed in every report.
    pub origin: Value,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn default_mode(alg: &str, n: usize) -> RandomMode {
    let fits = catalog::PAIR_NAMES
        .iter()
        .filter_map(|p| catalog::pair(p).ok())
        .any(|p| p.n() == n && catalog::algebra(alg).is_ok_and(|a| a.label() == p.codomain().label()));
    if fits {
        RandomMode::OrbitPerturb
    } else {
        RandomMode::Abelian
    }
}

pub fn generate(mode: RandomMode, alg: &str, n: usize, seed: u64, base: Option<&str>) -> CliResult<Loaded> {
    let g = Arc::new(catalog::algebra(alg).map_err(CliError::input)?);
    let base_pair = base.map(catalog::pair).transpose().map_err(CliError::input)?;
    let pair = random_pair(mode, g, n, seed, base_pair.as_ref())?;
    Ok(Loaded {
        pair,
        in_variety: mode.in_variety(),
        origin: json!({"kind": "random", "mode": mode.name(), "algebra": alg, "n": n, "seed": seed, "base": base}),
    })
}

pub fn load(src: &Source) -> CliResult<Loaded> {
    load_seeded(src, src.seed)
}

/// Like [`load`] with the seed overridden; only `random` inputs use it.
pub fn load_seeded(src: &Source, seed: u64) -> CliResult<Loaded> {
    let name = src.input.as_str();
    if name == "random" {
        let mode = src.mode.map(RandomMode::from).unwrap_or_else(|| default_mode(&src.algebra, src.n));
        return generate(mode, &src.algebra, src.n, seed, src.base.as_deref());
    }
    let path = Path::new(name);
    if path.is_file() {
        let (pair, in_variety) = io::read_pair(&read_text(path)?).map_err(CliError::input)?;
        return Ok(Loaded { pair, in_variety, origin: json!({"kind": "file", "path": name}) });
    }
    match catalog::pair(name) {
        Ok(pair) => Ok(Loaded { pair, in_variety: true, origin: json!({"kind": "catalog", "name": name}) }),
        Err(_) => Err(CliError::Io(format!("`{name}` is neither a file, a catalog pair nor `random`"))),
    }
}
