use std::path::PathBuf;

use capg_core::evalkit::{Interpolation, DEFAULT_IOU};
use capg_core::grounding::{CamConfig, CamGate, DEFAULT_EMBED_DIM, DEFAULT_MAX_CAPTION_LEN, DEFAULT_RASTER, DEFAULT_SMOOTH_KERNEL};
use capg_core::milhead::MilTrainConfig;
use capg_core::objectness::{
    Criterion, ScoringConfig, DEFAULT_BETA, DEFAULT_BORDER_FRACTION, DEFAULT_MARGIN_FRACTION, DEFAULT_NMS_IOU,
};
use capg_core::synth::SynthSpec;
use capg_core::training::{OptimizerKind, TrainConfig, DEFAULT_CLIP_NORM, DEFAULT_LEARNING_RATE, DEFAULT_MARGIN};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "capg", version, about = "Caption-grounded object localization pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for every random draw made by the stage.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Diagnostics level on stderr (off, error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus of feature maps, captions and boxes.
    Synth(SynthArgs),
    /// Train the region-word grounding model on a corpus.
    TrainSim(TrainArgs),
    /// Export class activation maps as PGM heat maps.
    GenCam(GenCamArgs),
    /// Rank vocabulary words by importance to find object words.
    MineVocab(MineArgs),
    /// Score proposals of every image with one objectness criterion.
    ScoreBoxes(ScoreBoxesArgs),
    /// Select pseudo ground-truth boxes per image.
    SelectPgt(SelectArgs),
    /// Train the multiple-instance box classifier on pseudo ground-truth.
    TrainMil(TrainMilArgs),
    /// Detect and classify objects.
    Detect(DetectArgs),
    /// Score detections against ground-truth boxes.
    Evaluate(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = SynthSpec::default().classes)]
    pub classes: usize,
    /// Training scenes.
    #[arg(long, default_value_t = SynthSpec::default().train_scenes)]
    pub scenes: usize,
    #[arg(long, default_value_t = SynthSpec::default().test_scenes)]
    pub test_scenes: usize,
    #[arg(long, default_value_t = SynthSpec::default().grid)]
    pub grid: usize,
    #[arg(long, default_value_t = SynthSpec::default().feat_dim)]
    pub feat_dim: usize,
    #[arg(long, default_value_t = SynthSpec::default().objects_min)]
    pub objects_min: usize,
    #[arg(long, default_value_t = SynthSpec::default().objects_max)]
    pub objects_max: usize,
    /// Smallest object side in cells.
    #[arg(long, default_value_t = SynthSpec::default().side_min)]
    pub side_min: usize,
    #[arg(long, default_value_t = SynthSpec::default().side_max)]
    pub side_max: usize,
    /// Standard deviation of the background and object noise.
    #[arg(long, default_value_t = SynthSpec::default().noise)]
    pub noise: f64,
    #[arg(long, default_value_t = SynthSpec::default().distractors_min)]
    pub distractors_min: usize,
    #[arg(long, default_value_t = SynthSpec::default().distractors_max)]
    pub distractors_max: usize,
}

impl SynthArgs {
    pub fn spec(&self, seed: u64) -> SynthSpec {
        SynthSpec {
            classes: self.classes,
            grid: self.grid,
            feat_dim: self.feat_dim,
            objects_min: self.objects_min,
            objects_max: self.objects_max,
            side_min: self.side_min,
            side_max: self.side_max,
            noise: self.noise,
            train_scenes: self.scenes,
            test_scenes: self.test_scenes,
            distractors_min: self.distractors_min,
            distractors_max: self.distractors_max,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Model directory for the checkpoint, vocabulary and loss trace.
    #[arg(long, default_value = "model")]
    pub out: PathBuf,
    #[arg(long, default_value_t = TrainConfig::default().steps)]
    pub steps: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_EMBED_DIM)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = DEFAULT_CLIP_NORM)]
    pub clip_norm: f64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = TrainConfig::default().beta1)]
    pub beta1: f64,
    #[arg(long, default_value_t = TrainConfig::default().beta2)]
    pub beta2: f64,
    #[arg(long, default_value_t = TrainConfig::default().adam_eps)]
    pub adam_eps: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_CAPTION_LEN)]
    pub max_caption_len: usize,
    /// Text file of `word v1 v2 ...` lines to initialize word embeddings.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Random batches used for the final retrieval estimate.
    #[arg(long, default_value_t = 200)]
    pub eval_batches: usize,
}

impl TrainArgs {
    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            margin: self.margin,
            learning_rate: self.lr,
            steps: self.steps,
            batch_size: self.batch_size,
            seed,
            beta1: self.beta1,
            beta2: self.beta2,
            adam_eps: self.adam_eps,
            clip_norm: self.clip_norm,
            optimizer: match self.optimizer {
                OptimizerArg::Adam => OptimizerKind::Adam,
                OptimizerArg::Sgd => OptimizerKind::Sgd,
            },
        }
    }
}

/// Corpus, trained model and the class words to localize.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "model")]
    pub model: PathBuf,
    /// Class words; defaults to the corpus classes, then to mined words.
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GateArg {
    Logit,
    Softmax,
}

#[derive(Debug, Args)]
pub struct CamArgs {
    /// Side of the square activation raster.
    #[arg(long, default_value_t = DEFAULT_RASTER)]
    pub raster: usize,
    #[arg(long, default_value_t = DEFAULT_SMOOTH_KERNEL)]
    pub smooth_kernel: usize,
    #[arg(long, value_enum, default_value_t = GateArg::Logit)]
    pub cam_gate: GateArg,
}

impl CamArgs {
    pub fn config(&self) -> CamConfig {
        CamConfig {
            raster_rows: self.raster,
            raster_cols: self.raster,
            kernel_size: self.smooth_kernel,
            gate: match self.cam_gate {
                GateArg::Logit => CamGate::Logit,
                GateArg::Softmax => CamGate::Softmax,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    MinEdgeGradient,
    AverageActivation,
    InsideOutsideContrast,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_enum, default_value_t = CriterionArg::MinEdgeGradient)]
    pub criterion: CriterionArg,
    /// Edge strip thickness as a fraction of the box side.
    #[arg(long, default_value_t = DEFAULT_MARGIN_FRACTION)]
    pub margin_fraction: f64,
    /// Weight of the mean activation inside the box.
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_NMS_IOU)]
    pub nms_iou: f64,
    /// Border width of the inside-outside criterion, as a box fraction.
    #[arg(long, default_value_t = DEFAULT_BORDER_FRACTION)]
    pub border_fraction: f64,
    /// Boxes kept per image after NMS.
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
}

impl ScoreArgs {
    pub fn config(&self) -> ScoringConfig {
        ScoringConfig {
            margin_fraction: self.margin_fraction,
            beta: self.beta,
            nms_iou: self.nms_iou,
            top_k: self.top_k,
            criterion: match self.criterion {
                CriterionArg::MinEdgeGradient => Criterion::MinEdgeGradient,
                CriterionArg::AverageActivation => Criterion::AverageActivation,
                CriterionArg::InsideOutsideContrast => Criterion::InsideOutsideContrast,
            },
            border_fraction: self.border_fraction,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProposalArgs {
    /// Per-image proposal boxes (JSON lines); sliding-window grid otherwise.
    #[arg(long)]
    pub proposals: Option<PathBuf>,
    /// Window centers per axis.
    #[arg(long, default_value_t = 14)]
    pub grid_steps: usize,
    /// Window sizes in grid cells.
    #[arg(long, value_delimiter = ',', default_values_t = [3.0, 4.0, 5.0])]
    pub scale_cells: Vec<f64>,
    /// Width-to-height ratios.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.6, 1.0 / 0.6])]
    pub aspects: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct GenCamArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub cam: CamArgs,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Images to export; the first `--limit` images of the split otherwise.
    #[arg(long = "image")]
    pub images: Vec<String>,
    #[arg(long, default_value_t = 4)]
    pub limit: usize,
    #[arg(long, default_value = "cams")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long, default_value = "model")]
    pub model: PathBuf,
    /// Number of words to keep.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub min_freq: u64,
    /// Words whose close neighbours are dropped.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    #[arg(long, default_value_t = 0.6)]
    pub exclude_threshold: f64,
    /// Output file; `<model>/mined.json` by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreBoxesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub cam: CamArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[command(flatten)]
    pub proposals: ProposalArgs,
    #[arg(long, default_value = "train")]
    pub split: String,
    /// Ranked boxes written per image.
    #[arg(long, default_value_t = 100)]
    pub keep: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub cam: CamArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[command(flatten)]
    pub proposals: ProposalArgs,
    #[arg(long, default_value = "train")]
    pub split: String,
    #[arg(long, default_value = "pgt.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainMilArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub proposals: ProposalArgs,
    /// Pseudo ground-truth boxes from `select-pgt`.
    #[arg(long)]
    pub pgt: PathBuf,
    #[arg(long, default_value = "train")]
    pub split: String,
    #[arg(long, default_value_t = MilTrainConfig::default().learning_rate)]
    pub lr: f64,
    #[arg(long, default_value_t = MilTrainConfig::default().steps)]
    pub steps: usize,
    /// Output checkpoint; `<model>/mil.mpar` by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub cam: CamArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[command(flatten)]
    pub proposals: ProposalArgs,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Box classifier checkpoint; `<model>/mil.mpar` when present.
    #[arg(long)]
    pub mil: Option<PathBuf>,
    /// Ignore the box classifier and split class mass uniformly.
    #[arg(long, conflicts_with = "mil")]
    pub no_mil: bool,
    #[arg(long, default_value = "det.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InterpArg {
    AllPoint,
    ElevenPoint,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Evaluate on every ground-truth image, not only those predicted.
    #[arg(long)]
    pub all_gt: bool,
    #[arg(long, default_value_t = DEFAULT_IOU)]
    pub iou: f64,
    #[arg(long, value_enum, default_value_t = InterpArg::AllPoint)]
    pub interpolation: InterpArg,
    /// Ignore class labels when matching for precision and recall.
    #[arg(long)]
    pub class_agnostic: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 5, 10, 50, 100])]
    pub pr_ks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 10, 100])]
    pub ar_ks: Vec<usize>,
    /// Metrics JSON file.
    #[arg(long, default_value = "metrics.json")]
    pub out: PathBuf,
}

impl EvalArgs {
    pub fn interpolation(&self) -> Interpolation {
        match self.interpolation {
            InterpArg::AllPoint => Interpolation::AllPoint,
            InterpArg::ElevenPoint => Interpolation::ElevenPoint,
        }
    }
}
