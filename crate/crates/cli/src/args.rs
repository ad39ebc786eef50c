use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "coordlab", version, about = "Linguistic style coordination and power differentials")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailsArg {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestArg {
    Student,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionArg {
    Greater,
    Less,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SideArg {
    Speakers,
    Targets,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Utterances JSONL.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Participants JSONL.
    #[arg(long, global = true)]
    pub participants: Option<PathBuf>,
    /// Cases JSONL.
    #[arg(long, global = true)]
    pub cases: Option<PathBuf>,
    /// Lexicon TSV; the shipped lexicon when absent.
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Exchange filters as JSON, or @path to a JSON file.
    #[arg(long, global = true)]
    pub filters: Option<String>,
    #[arg(long, global = true, env = "COORDLAB_SEED")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "coordlab-out")]
    pub out: PathBuf,
    /// Show values as percentages on the terminal and in charts. Files keep natural units.
    #[arg(long, global = true)]
    pub percent: bool,
    #[arg(long, global = true, value_enum, default_value_t = TailsArg::One)]
    pub tails: TailsArg,
    #[arg(long, global = true, value_enum, default_value_t = TestArg::Student)]
    pub test: TestArg,
    /// Bootstrap resamples.
    #[arg(long, global = true, default_value_t = 1000)]
    pub resamples: usize,
    /// Treat each (speaker, case) as its own participant.
    #[arg(long, global = true)]
    pub identity_per_case: bool,
    /// Minimum exchanges whose target exhibits a marker for it to be defined.
    #[arg(long, global = true, default_value_t = 1)]
    pub min_exhibits: usize,
    /// Minimum exchanges for a speaker's marker value to be defined.
    #[arg(long, global = true, default_value_t = 1)]
    pub min_exchanges: usize,
    /// Run single-threaded.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Also write SVG charts.
    #[arg(long, global = true)]
    pub svg: bool,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Coordination profile of speakers towards targets.
    Coordinate {
        /// Group selector for the repliers.
        #[arg(long, default_value = "all")]
        speakers: String,
        /// Group selector for the people replied to.
        #[arg(long, default_value = "all")]
        targets: String,
    },
    /// Tests two groups against each other, as speakers or as targets.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Whether the groups are compared as speakers or as targets.
        #[arg(long = "as", value_enum, default_value_t = SideArg::Speakers)]
        side: SideArg,
        /// The other side of every exchange.
        #[arg(long, default_value = "all")]
        counterpart: String,
        /// Expected sign of a - b.
        #[arg(long, value_enum, default_value_t = DirectionArg::None)]
        direction: DirectionArg,
    },
    /// Tests both power hypotheses for a high and a low group.
    Hypotheses {
        #[arg(long)]
        high: String,
        #[arg(long)]
        low: String,
        #[arg(long, default_value = "all")]
        universe: String,
    },
    /// Monthly coordination around each user's status event.
    Timeline {
        /// Group selector for the users with the event.
        #[arg(long)]
        users: String,
        #[arg(long, default_value = "admin")]
        role: String,
        /// Buckets from -window to +window months.
        #[arg(long, default_value_t = 6)]
        window: i64,
        #[arg(long, default_value_t = 5)]
        min_population: usize,
    },
    /// Status prediction grid across domains.
    Predict {
        /// JSON list of domains: {tag, corpus, participants, cases, high, low, filters, identity_per_case}.
        #[arg(long)]
        domains: Option<PathBuf>,
        /// Domain tag when the common corpus flags are used instead of --domains.
        #[arg(long, default_value = "corpus")]
        tag: String,
        #[arg(long)]
        high: Option<String>,
        #[arg(long)]
        low: Option<String>,
        /// Comma-separated feature kinds.
        #[arg(long, default_value = "coordination,stylistic,bow")]
        kinds: String,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Hinge loss weight.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Also export each domain's feature datasets as JSONL.
        #[arg(long)]
        export_datasets: bool,
    },
    /// Generates a synthetic corpus and its oracle from a generator spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Loads and checks a corpus (and optionally a generator spec).
    Validate {
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}
