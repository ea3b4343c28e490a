use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use linalign::decode::{DualForward, SamplingConfig, SamplingMode};
use linalign::prefeval::{EvalMode, DEFAULT_SYSTEM_PROMPT};
use linalign::scd::{AlignmentConfig, Placement};
use linalign::verify::Fault;
use linalign::TokenId;

use crate::backend::BackendSpec;

#[derive(Debug, Parser)]
#[command(
    name = "linalign",
    version,
    about = "Decoding-time linear alignment with a principle-contrast gradient"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a continuation, optionally steered by a principle.
    Generate(GenerateArgs),
    /// Check the closed-form update against the numerical oracle.
    Verify(VerifyArgs),
    /// Run the personal-preference multiple-choice evaluation.
    Eval(EvalArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    /// Step length of the logit update in the p-norm.
    #[arg(long, default_value_t = 3.0)]
    pub lambda: f64,
    /// Norm order of the divergence ball, > 1.
    #[arg(long = "p", default_value_t = 2.0)]
    pub p: f64,
    /// Logit differences with a smaller l2 norm are ignored.
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon_floor: f64,
}

impl AlignArgs {
    pub fn config(&self) -> AlignmentConfig {
        AlignmentConfig {
            p: self.p,
            lambda: self.lambda,
            epsilon_floor: self.epsilon_floor,
            full_form: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    /// Always take the highest-scoring token.
    #[arg(long, conflicts_with = "temperature")]
    pub greedy: bool,
    /// Softmax temperature for sampling.
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Keep only the k highest-scoring tokens.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Keep the smallest set of tokens with this much probability mass.
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long, default_value_t = 512)]
    pub max_new_tokens: usize,
    /// Seeds sampling and, for eval, the ground-truth draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extra stop token id; the backend's own stop tokens always apply.
    #[arg(long = "stop-token")]
    pub stop_tokens: Vec<TokenId>,
}

impl SamplingArgs {
    pub fn config(&self) -> SamplingConfig {
        SamplingConfig {
            mode: if self.greedy {
                SamplingMode::Greedy
            } else {
                SamplingMode::Temperature
            },
            temperature: self.temperature,
            top_k: self.top_k,
            top_p: self.top_p,
            max_new_tokens: self.max_new_tokens,
            stop_tokens: self.stop_tokens.iter().copied().collect::<BTreeSet<_>>(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlacementArg {
    System,
    User,
}

impl From<PlacementArg> for Placement {
    fn from(p: PlacementArg) -> Self {
        match p {
            PlacementArg::System => Placement::SystemPrefix,
            PlacementArg::User => Placement::UserPrefix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DualForwardArg {
    Auto,
    Batched,
    Sequential,
}

impl From<DualForwardArg> for DualForward {
    fn from(d: DualForwardArg) -> Self {
        match d {
            DualForwardArg::Auto => DualForward::Auto,
            DualForwardArg::Batched => DualForward::Batched,
            DualForwardArg::Sequential => DualForward::Sequential,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// toy:<path> or http:<url>.
    #[arg(long, env = "LINALIGN_BACKEND")]
    pub backend: BackendSpec,
    /// Prompt text, tokenized by the backend.
    #[arg(long, conflicts_with = "prompt_tokens")]
    pub prompt: Option<String>,
    /// Prompt as comma-separated token ids.
    #[arg(long, value_delimiter = ',')]
    pub prompt_tokens: Option<Vec<TokenId>>,
    /// Built-in principle name (harmless, harmless-numbered) or a text file.
    #[arg(long)]
    pub principle: Option<String>,
    /// Where the principle goes in the principled context.
    #[arg(long, value_enum, default_value_t = PlacementArg::System)]
    pub placement: PlacementArg,
    #[command(flatten)]
    pub align: AlignArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// How the plain and principled forwards reach the backend.
    #[arg(long, value_enum, default_value_t = DualForwardArg::Auto)]
    pub dual_forward: DualForwardArg,
    /// Write per-step diagnostics as JSON lines.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// Write the full generation result as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the run manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    InflateRadius,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::InflateRadius => Fault::InflateRadius,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    /// Problem dimensions to cycle through.
    #[arg(long, value_delimiter = ',', default_value = "3,8,16,64")]
    pub dims: Vec<usize>,
    /// Norm orders to cycle through.
    #[arg(long = "p", value_delimiter = ',', default_value = "1.5,2,3,4")]
    pub ps: Vec<f64>,
    /// Relative radius tolerance and KKT tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Smallest accepted cosine between closed-form and oracle steps.
    #[arg(long, default_value_t = 0.999)]
    pub min_cosine: f64,
    /// Instance i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write every instance result as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the run manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Deliberately break the solver to exercise the failure path.
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Baseline,
    Principle,
    Align,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Baseline => EvalMode::Baseline,
            ModeArg::Principle => EvalMode::PrinciplePrompt,
            ModeArg::Align => EvalMode::LinearAlign,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON-lines dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    /// toy:<path>, http:<url> or scripted:<replies.json>.
    #[arg(long, env = "LINALIGN_BACKEND")]
    pub backend: BackendSpec,
    /// baseline: no persona; principle: persona in the prompt; align: persona
    /// only in the principled context.
    #[arg(long, value_enum, default_value_t = ModeArg::Baseline)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub align: AlignArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Empty to drop the system block.
    #[arg(long, default_value = DEFAULT_SYSTEM_PROMPT)]
    pub system_prompt: String,
    /// Present the four answers in a seeded random order.
    #[arg(long)]
    pub shuffle_options: bool,
    /// Stop at the first failed item instead of scoring it incorrect.
    #[arg(long)]
    pub abort_on_error: bool,
    /// Row label in the report table; defaults to the model id.
    #[arg(long)]
    pub label: Option<String>,
    /// Directory for report.txt, report.json and manifest.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}
