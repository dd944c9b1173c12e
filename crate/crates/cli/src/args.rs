use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liepair_core::{RandomMode, Subgroup};

use crate::profile::Profile;

#[derive(Debug, Parser)]
#[command(name = "liepair", version, about = "Moment maps, energy flows and structure theorems for pairs (μ, φ)")]
pub struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Default tolerance profile.
    #[arg(long, global = true, value_enum, env = "LIEPAIR_PROFILE", default_value_t = Profile::Default)]
    pub profile: Profile,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Abelian,
    Subalgebra,
    OrbitPerturb,
    Ambient,
}

impl From<Mode> for RandomMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Abelian => RandomMode::Abelian,
            Mode::Subalgebra => RandomMode::Subalgebra,
            Mode::OrbitPerturb => RandomMode::OrbitPerturb,
            Mode::Ambient => RandomMode::Ambient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Full,
    Det1,
}

impl From<GroupArg> for Subgroup {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Full => Subgroup::Full,
            GroupArg::Det1 => Subgroup::Det1,
        }
    }
}

/// Where a pair comes from.
#[derive(Debug, Clone, Args)]
pub struct Source {
    /// A pair file, a catalog pair name, or `random`.
    pub input: String,

    /// Dimension of the domain for `random`.
    #[arg(long, default_value_t = 2)]
    pub n: usize,

    /// Codomain for `random`.
    #[arg(long, default_value = "sl2")]
    pub algebra: String,

    /// Seed for `random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Generator for `random`. Without it, `orbit-perturb` is used when the
    /// catalog has a pair of the right shape and `abelian` otherwise.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,

    /// Catalog pair used by the `subalgebra` and `orbit-perturb` generators.
    #[arg(long)]
    pub base: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    /// Initial step size.
    #[arg(long, default_value_t = 1e-2)]
    pub step: f64,

    /// Stop when the gradient norm falls below this.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long, default_value_t = 200_000)]
    pub max_steps: usize,

    /// Abort when a variety residual exceeds this.
    #[arg(long, default_value_t = 1e-6)]
    pub guard: f64,

    /// Trajectory sampling period.
    #[arg(long, default_value_t = 100)]
    pub record_every: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Residuals of the pair and validation of its codomain.
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// Moment map value and its identities.
    Moment {
        #[command(flatten)]
        source: Source,
        /// Cross-check against the definitional moment map.
        #[arg(long)]
        oracle: bool,
    },
    /// Pair derivations and the θ-invariant subalgebra.
    Derivations {
        #[command(flatten)]
        source: Source,
        /// Singular-value cutoff.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Criticality test, spectrum of D and the kernel check.
    Critical {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Negative gradient flow of the energy.
    Flow {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        flow: FlowArgs,
        /// Run this many consecutive seeds (`random` input only).
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Trajectory CSV path; with `--count` the seed is appended to the stem.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Emit the limit pair file here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Kempf–Ness norm minimization along the group orbit.
    Minimize {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value_t = GroupArg::Det1)]
        subgroup: GroupArg,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        /// Stop when the projected moment norm falls below this.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 200_000)]
        max_steps: usize,
        /// Collapse threshold relative to the initial norm.
        #[arg(long, default_value_t = 1e-8)]
        collapse: f64,
        #[arg(long, default_value_t = 100)]
        record_every: usize,
        /// Run this many consecutive seeds (`random` input only).
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Emit the minimizer pair file here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Levi splitting ℝⁿ = m ⊕ a ⊕ n and restriction to the nilradical.
    Decompose {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        tol: Option<f64>,
        /// Emit the nilradical pair file here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Integer gradations by the spectra of D and ad u.
    Gradation {
        #[command(flatten)]
        source: Source,
        /// Largest denominator tried in the rational reconstruction.
        #[arg(long, default_value_t = 1000)]
        max_den: u64,
    },
    /// The reductive part pair on ker D.
    Reductive {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Semi-direct extension of a nilpotent critical pair.
    Extend {
        #[command(flatten)]
        source: Source,
        /// Extension pair file into the θ-invariant derivations; defaults to the toral line.
        #[arg(long)]
        ext: Option<PathBuf>,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Compatible Cartan involution θ' on a minimal pair.
    Mostow {
        #[command(flatten)]
        source: Source,
        /// Run the det-1 Kempf–Ness minimization first.
        #[arg(long)]
        minimize: bool,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Structure of an abelian pair (μ = 0).
    ClassifyAbelian {
        #[command(flatten)]
        source: Source,
    },
    /// Metric gauge making the moment of μ scalar.
    Gauge {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Built-in algebras and pairs.
    Catalog {
        /// Emit expected values for the frozen instances.
        #[arg(long)]
        fixtures: bool,
        #[command(subcommand)]
        action: Option<CatalogAction>,
    },
    /// Seeded pair generator.
    Random {
        #[arg(long, value_enum, default_value_t = Mode::Ambient)]
        mode: Mode,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value = "sl2")]
        algebra: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        base: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    /// Names of the built-in algebras and pairs.
    List,
    /// Pair or algebra file for a catalog name.
    Emit { name: String },
}
