use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "unipos", about = "Universal part-of-speech tagging toolkit")]
pub struct Cli {
    /// TOML file with `seed`, `jobs` and `map_dir` defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for tagging and the induction E-step.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Directory searched for mapping files named without a path.
    #[arg(long, global = true, env = "UNIPOS_MAP_DIR", value_name = "DIR")]
    pub map_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add universal tags to a corpus.
    Map(MapArgs),
    /// Check a mapping against the fine tags of a corpus.
    Validate(ValidateArgs),
    /// Train a trigram HMM tagger.
    Train(TrainArgs),
    /// Tag a corpus with a trained model.
    Tag(TagArgs),
    /// Token accuracy of a model on a gold corpus.
    Eval(EvalArgs),
    /// Tagset experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Unsupervised dependency grammar induction.
    Induce(InduceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Conllx,
    Wordtag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Column {
    Original,
    Universal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    Sample,
    Population,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value = "conllx")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MapSelect {
    /// Mapping file, or the name of one in the map directory or bundled
    /// with the tool (en-ptb, de-tiger, bg-btb).
    #[arg(long = "map", value_name = "MAPFILE")]
    pub map: String,

    /// Map fine tags missing from the mapping to X instead of failing.
    #[arg(long)]
    pub fallback_x: bool,
}

#[derive(Debug, Args)]
pub struct BeamArgs {
    /// Beam factor; states scoring below best/FACTOR are pruned.
    #[arg(long, default_value_t = unipos::hmm::DEFAULT_BEAM, value_name = "FACTOR")]
    pub beam: f64,

    /// Exact Viterbi search.
    #[arg(long, conflicts_with = "beam")]
    pub no_beam: bool,
}

impl BeamArgs {
    pub fn beam(&self) -> Option<f64> {
        (!self.no_beam).then_some(self.beam)
    }
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub mapping: MapSelect,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long = "map", value_name = "MAPFILE")]
    pub map: String,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "original")]
    pub tag_column: Column,
    /// Mapping used to derive universal tags when the corpus has none.
    #[arg(long = "map", value_name = "MAPFILE")]
    pub map: Option<String>,
    /// Map uncovered fine tags to X.
    #[arg(long, requires = "map")]
    pub fallback_x: bool,
    #[arg(long, value_name = "OUT")]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long, value_name = "MODEL")]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Tagged output; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "MODEL")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value = "conllx")]
    pub format: Format,
    /// Gold column to compare against.
    #[arg(long, value_enum, default_value = "original")]
    pub tag_column: Column,
    /// Compare predicted and gold tags after mapping both to universal tags.
    #[arg(long = "map", value_name = "MAPFILE")]
    pub map: Option<String>,
    #[command(flatten)]
    pub beam: BeamArgs,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// O/O, U/U and O/U accuracies for one treebank.
    Matrix(MatrixArgs),
    /// Cross-treebank variance of a matrix report.
    Variance(VarianceArgs),
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,
    /// Test corpus; without it the training file is split contiguously.
    #[arg(long, value_name = "FILE")]
    pub test: Option<PathBuf>,
    /// Training fraction when splitting.
    #[arg(long, default_value_t = 0.9, conflicts_with = "test")]
    pub split: f64,
    #[arg(long, value_enum, default_value = "conllx")]
    pub format: Format,
    #[command(flatten)]
    pub mapping: MapSelect,
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Report file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    /// Matrix report with one row per treebank.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "sample")]
    pub convention: Convention,
    /// Report file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InduceArgs {
    /// CoNLL-X corpus with gold heads.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Mapping to universal tags; without it CPOSTAG must hold them.
    #[arg(long = "map", value_name = "MAPFILE")]
    pub map: Option<String>,
    /// Map uncovered fine tags to X.
    #[arg(long, requires = "map")]
    pub fallback_x: bool,
    /// Longest sentence kept, counted without punctuation.
    #[arg(long, default_value_t = 10)]
    pub max_len: usize,
    /// Apply the length limit before removing punctuation.
    #[arg(long)]
    pub len_before_strip: bool,
    /// EM iterations.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Rules file, or `default` for the bundled list.
    #[arg(long, value_name = "RULES")]
    pub rules: Option<String>,
    /// Strength for rule lines that do not give one.
    #[arg(long, default_value_t = 1.0)]
    pub rule_strength: f64,
    /// Fraction of tags replaced at random before training.
    #[arg(long, default_value_t = 0.0, value_name = "RATE")]
    pub tag_noise: f64,
    /// Noise seed; defaults to the config seed, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allow several dependents of the root.
    #[arg(long)]
    pub multi_root: bool,
    /// CoNLL-X output with the induced heads.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Report file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}
