use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vdi", version, about = "Volumetric depth images on a simulated cluster")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a single-domain VDI from a scene.
    Generate(GenerateArgs),
    /// Generate and composite across k simulated PEs.
    Simulate(SimulateArgs),
    /// Render a VDI at its generation view or orbited views.
    Render(RenderArgs),
    /// Reference raycast of a scene.
    Dvr(DvrArgs),
    /// SSIM and PSNR between two images.
    Compare(CompareArgs),
    /// Dump a VDI header and list statistics.
    Inspect(InspectArgs),
    /// Serve a VDI, its metadata and static assets over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args, Clone)]
pub struct SamplingOverrides {
    /// Override the scene's supersegment budget.
    #[arg(long)]
    pub n_sup: Option<usize>,
    /// Override the scene's sampling step.
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct OutputRepr {
    /// Write the fixed-size grid instead of the packed representation.
    #[arg(long, conflicts_with = "dense")]
    pub full: bool,
    /// Write the packed representation (default).
    #[arg(long)]
    pub dense: bool,
    /// LZ4-compress the body.
    #[arg(long)]
    pub compress: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub repr: OutputRepr,
    #[command(flatten)]
    pub sampling: SamplingOverrides,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    Threads,
    Sequential,
    Shuffled,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// PE count; overrides the scene's decomposition.
    #[arg(long, short)]
    pub k: Option<usize>,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Where to write the run metrics JSON.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[command(flatten)]
    pub repr: OutputRepr,
    #[command(flatten)]
    pub sampling: SamplingOverrides,
    #[arg(long, value_enum, default_value = "threads")]
    pub schedule: ScheduleArg,
    /// Seed for the shuffled schedule.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct ViewArgs {
    /// Orbit angles in degrees about the content centre; 0 is the generation view.
    #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
    pub deviation: Vec<f64>,
    /// Output path prefix; files are `<prefix>_<angle>deg.png` and `.vimg`.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Background colour behind the PNG, as `r,g,b` in [0, 1].
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 0.0])]
    pub background: Vec<f32>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub vdi: PathBuf,
    #[command(flatten)]
    pub view: ViewArgs,
    /// March distance for orbited views; defaults to the generation step.
    #[arg(long)]
    pub march_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DvrArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Take the camera and orbit centre from this VDI so views line up with `render`.
    #[arg(long)]
    pub vdi: Option<PathBuf>,
    #[command(flatten)]
    pub view: ViewArgs,
    #[command(flatten)]
    pub sampling: SamplingOverrides,
    /// Stop rays at this accumulated opacity; 1 disables early termination.
    #[arg(long, default_value_t = 1.0)]
    pub early_termination: f32,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Write the SSIM difference image here (brighter is more different).
    #[arg(long)]
    pub diff: Option<PathBuf>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub vdi: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    pub vdi: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory of static viewer assets.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// Request worker threads.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
}
