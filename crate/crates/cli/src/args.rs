use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "adk", version, about = "Dataset engineering and evaluation for UAV object detection")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key = value file merged under explicit flags; `[name]` sections apply to one subcommand
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for per-image parallelism (default: logical cores)
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut images into overlapping windows, remapping labels when given
    Tile(TileArgs),
    /// Map tile-level detections back to image coordinates
    Stitch(StitchArgs),
    /// Convert label files between YOLO, VOC and Labelme
    Convert(ConvertArgs),
    /// Assign train/val/test splits in a manifest
    Split(SplitArgs),
    /// Turn raw detections into proposals for review
    #[command(name = "pseudo-label")]
    PseudoLabel(PseudoLabelArgs),
    /// Oversample under-represented classes with box-aware augmentation
    Augment(AugmentArgs),
    /// Cluster ground-truth box shapes into anchors
    Anchors(AnchorArgs),
    /// Score detections against ground truth
    Eval(EvalArgs),
    /// Per-split image, instance and size statistics
    Stats(StatsArgs),
    /// Run the large selective kernel block on a tensor
    Lsk(LskArgs),
    /// Serve the review API for a dataset directory
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Clamp,
    DropPartial,
}

#[derive(Debug, Args)]
pub struct TileArgs {
    /// Images or directories of images
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 640)]
    pub win: u32,
    #[arg(long, default_value_t = 630)]
    pub stride: u32,
    #[arg(long, value_enum, default_value_t = Policy::Clamp)]
    pub policy: Policy,
    /// Directory of YOLO label files named after the image stems
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Class names, comma separated or a file with one per line; writes a tile manifest
    #[arg(long)]
    pub classes: Option<String>,
    /// Minimum visible fraction for a clipped label to be kept in a tile
    #[arg(long, default_value_t = 0.0)]
    pub min_visibility: f64,
}

#[derive(Debug, Args)]
pub struct StitchArgs {
    /// Tile plan files or directories holding them
    #[arg(long, required = true, num_args = 1..)]
    pub plan: Vec<PathBuf>,
    /// Detections JSONL keyed by tile name
    #[arg(long)]
    pub dets: PathBuf,
    #[arg(long, default_value_t = 0.45)]
    pub nms: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelFormat {
    Yolo,
    Voc,
    Labelme,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    pub from: LabelFormat,
    #[arg(long, value_enum)]
    pub to: LabelFormat,
    /// Label file or directory of label files
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest supplying class names and image sizes
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Class names when no manifest is given
    #[arg(long)]
    pub classes: Option<String>,
    /// Image size WxH for YOLO files the manifest does not cover
    #[arg(long, value_parser = parse_size)]
    pub size: Option<(u32, u32)>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// train:val:test
    #[arg(long, default_value = "8:1:1", value_parser = parse_ratios)]
    pub ratios: [u32; 3],
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep tiles of one source image in the same split
    #[arg(long)]
    pub group_by_source: bool,
    /// Output manifest (default: rewrite in place)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PseudoLabelArgs {
    #[arg(long)]
    pub dets: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub conf: f64,
    #[arg(long, default_value_t = 0.45)]
    pub nms: f64,
    #[arg(long)]
    pub class_agnostic: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Images per class to reach
    #[arg(long, default_value_t = 250)]
    pub target: usize,
    /// Only draw sources from (and balance) this split
    #[arg(long, value_parser = parse_split)]
    pub split: Option<adk_core::manifest::Split>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave classes already above target alone instead of failing
    #[arg(long)]
    pub allow_downsample: bool,
    /// Write the plan and stop
    #[arg(long)]
    pub plan_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Iou,
    Euclidean,
}

#[derive(Debug, Args)]
pub struct AnchorArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 9)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Metric::Iou)]
    pub metric: Metric,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, value_parser = parse_split)]
    pub split: Option<adk_core::manifest::Split>,
    /// Write the anchor set as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth label directory (or dataset root holding manifest.json)
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub dets: PathBuf,
    /// Manifest; looked up next to --gt when omitted
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    #[arg(long, default_value_t = 0.25)]
    pub conf: f64,
    #[arg(long, value_parser = parse_split)]
    pub split: Option<adk_core::manifest::Split>,
    /// Write the full report as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 1024.0)]
    pub small_max: f64,
    #[arg(long, default_value_t = 9216.0)]
    pub medium_max: f64,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvImpl {
    Fast,
    Direct,
}

#[derive(Debug, Args)]
pub struct LskArgs {
    /// Input tensor file; random when omitted
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Parameter file; random when omitted
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Shape of the random input as NxCxHxW
    #[arg(long, default_value = "1x8x32x32", value_parser = parse_shape)]
    pub shape: [usize; 4],
    /// Seed for random inputs and parameters
    #[arg(long, default_value_t = 0)]
    pub init_seed: u64,
    #[arg(long, value_enum, default_value_t = ConvImpl::Fast)]
    pub conv: ConvImpl,
    /// Also run the direct convolution and report the largest difference
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the parameters used (useful with random parameters)
    #[arg(long)]
    pub save_params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Built review UI bundle to serve at /
    #[arg(long)]
    pub ui: Option<PathBuf>,
    /// Proposal directory (default: <root>/proposals)
    #[arg(long)]
    pub proposals: Option<PathBuf>,
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let p = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("{v}: {e}"));
    Ok((p(w)?, p(h)?))
}

fn parse_ratios(s: &str) -> Result<[u32; 3], String> {
    let parts: Vec<u32> = s.split(':').map(|v| v.trim().parse::<u32>().map_err(|e| format!("{v}: {e}"))).collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected three ratios like 8:1:1".to_string())
}

fn parse_shape(s: &str) -> Result<[usize; 4], String> {
    let parts: Vec<usize> = s.split(['x', 'X']).map(|v| v.trim().parse::<usize>().map_err(|e| format!("{v}: {e}"))).collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected NxCxHxW".to_string())
}

fn parse_split(s: &str) -> Result<adk_core::manifest::Split, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown split {s}"))
}
