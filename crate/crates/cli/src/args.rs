use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sibuya_core::simulate::{Attachment, ProgenySampler};
use sibuya_core::{AlphaParam, Mode};

#[derive(Debug, Parser)]
#[command(
    name = "sibuya",
    version,
    about = "Exact and Monte Carlo computations for Sibuya trees and forests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Tail parameter as `p/q` or a terminating decimal in (0, 1).
    #[arg(long, default_value = "1/2")]
    pub alpha: AlphaParam,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Float,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Float => Mode::Float,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Recurrence,
    AlternatingSum,
    Compositions,
    Bell,
    /// Every route, failing unless they agree.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KnQuantity {
    /// Law of the number of trees.
    Law,
    /// Mean number of trees.
    Mean,
    /// Law reweighted by `c1^{-k}`.
    Tilted,
    /// Occupied-table count of the two-parameter restaurant.
    Crp,
    /// Renewal count of i.i.d. Sibuya sizes.
    Renewal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RescaleKind {
    SimplyGenerated,
    Increasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimTarget {
    /// Sibuya values, Beta-mixed geometric sampler.
    Sibuya,
    /// Sibuya values by sequential Bernoulli trials.
    Sequential,
    /// Total progeny of Galton–Watson trees.
    Bgw,
    /// Number of trees in grown forests.
    Forest,
    /// Occupied tables of the two-parameter restaurant.
    Crp,
    /// Moments of K_n / n^α.
    KnLimit,
    /// Laplace transform of rescaled sums of Sibuya values.
    StableLimit,
    /// Leaf counts of grown forests.
    Leaves,
}

impl SimTarget {
    pub fn progeny_sampler(self) -> Option<ProgenySampler> {
        match self {
            SimTarget::Sibuya => Some(ProgenySampler::Mixture),
            SimTarget::Sequential => Some(ProgenySampler::Sequential),
            SimTarget::Bgw => Some(ProgenySampler::Bgw),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttachmentArg {
    NodeWeighted,
    SizeProportional,
}

impl From<AttachmentArg> for Attachment {
    fn from(a: AttachmentArg) -> Attachment {
        match a {
            AttachmentArg::NodeWeighted => Attachment::NodeWeighted,
            AttachmentArg::SizeProportional => Attachment::SizeProportional,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sibuya progeny law on 1..=n-max with a tail cell.
    Progeny {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
    },
    /// Generalized Stirling triangle and forest counts.
    Stirling {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = Route::Recurrence)]
        route: Route,
    },
    /// Number of trees in a size-n forest.
    Kn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = KnQuantity::Law)]
        what: KnQuantity,
        /// Tilt in (0, 1], as `p/q` or a decimal.
        #[arg(long)]
        c1: Option<String>,
        /// Restaurant concentration, as `p/q` or a decimal.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
    },
    /// Tree sizes of a size-n forest with k trees.
    Occupancy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Only the law of one tree's size.
        #[arg(long)]
        marginal: bool,
        /// Probability of one composition, e.g. `2,1,1`.
        #[arg(long, value_delimiter = ',')]
        parts: Option<Vec<usize>>,
    },
    /// Saddle point, free energy and rate function at mean tree size rho.
    Thermo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rho: f64,
        /// Rate function arguments, comma separated.
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        /// Number of trees for the exact free energy at n = round(rho k).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Classifies a rescaled family.
    Rescale {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c1: f64,
        /// Defaults to the regular boundary for simply generated trees.
        #[arg(long)]
        c2: Option<f64>,
        #[arg(long, value_enum, default_value_t = RescaleKind::SimplyGenerated)]
        kind: RescaleKind,
    },
    /// Monte Carlo runs.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        what: SimTarget,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, env = "SIBUYA_SEED", default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Forest size, or number of customers.
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Number of summed Sibuya values for the stable limit.
        #[arg(long, default_value_t = 1000)]
        k: usize,
        #[arg(long)]
        theta: Option<f64>,
        /// Histogram range 1..=bins for progeny samplers.
        #[arg(long, default_value_t = 30)]
        bins: usize,
        /// Population cap per tree, or trial cap for the sequential sampler.
        #[arg(long, default_value_t = sibuya_core::simulate::DEFAULT_CAP)]
        cap: u64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        lambda: Vec<f64>,
        #[arg(long, value_enum, default_value_t = AttachmentArg::NodeWeighted)]
        attachment: AttachmentArg,
    },
    /// Recomputes every exact identity by independent routes.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 15)]
        n_max: usize,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Progeny { common, .. }
            | Command::Stirling { common, .. }
            | Command::Kn { common, .. }
            | Command::Occupancy { common, .. }
            | Command::Thermo { common, .. }
            | Command::Rescale { common, .. }
            | Command::Simulate { common, .. }
            | Command::Verify { common, .. } => common,
        }
    }
}
