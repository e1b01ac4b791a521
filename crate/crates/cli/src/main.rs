//! `manifold-rbf`: Gaussian RBF kernels on SPD and Grassmann manifolds from
//! the command line.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.
//! Set `MANIFOLD_RBF_THREADS` to fix the worker thread count.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use manifold_rbf::kernel::Point;
use manifold_rbf::{ErrorCategory, GrassmannMetric, Manifold, SpdMetric};
use serde::Serialize;

use crate::output::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "manifold-rbf",
    version,
    about = "Gaussian RBF kernels on Riemannian manifolds"
)]
struct Cli {
    /// Seed for every random choice; recorded in all outputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Search random point sets for Gram matrices that are not PSD.
    Definiteness(DefinitenessArgs),
    /// Gram matrix of a dataset, optionally with an eigenvalue audit.
    Gram(GramArgs),
    /// Kernel k-means clustering.
    Cluster(ClusterArgs),
    /// Kernel PCA coordinates.
    Kpca(KpcaArgs),
    /// Kernel Fisher discriminant coordinates.
    Kfda(KfdaArgs),
    /// Train a (multiclass) SVM on a labelled dataset.
    SvmTrain(SvmTrainArgs),
    /// Predict labels with a trained SVM model.
    SvmPredict(SvmPredictArgs),
    /// Multiple kernel learning over precomputed Gram matrices.
    MklTrain(MklTrainArgs),
    /// Region covariance or structure tensor descriptors from images.
    Covdesc(CovdescArgs),
    /// Grassmann points spanned by sets of vectors.
    Subspace(SubspaceArgs),
    /// Seeded synthetic datasets with ground-truth labels.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ManifoldKind {
    Spd,
    Grassmann,
    Euclidean,
}

/// Manifold and metric selection.
#[derive(Debug, Args, Serialize)]
struct MetricArgs {
    /// Defaults to the kind of the input points, or spd when there is no input.
    #[arg(long, value_enum)]
    manifold: Option<ManifoldKind>,
    /// Metric name, e.g. log-euclidean, power-euclidean(0.5), projection.
    /// Defaults to log-euclidean on SPD and projection on Grassmann.
    #[arg(long)]
    metric: Option<String>,
}

impl MetricArgs {
    /// Resolves the manifold, inferring its kind from `points` when
    /// `--manifold` is absent.
    fn resolve(&self, points: &[Point]) -> Result<Manifold, CliError> {
        let bad = |e: manifold_rbf::Error| CliError::Usage(e.to_string());
        let kind = self.manifold.unwrap_or(match points.first() {
            Some(Point::Grassmann(_)) => ManifoldKind::Grassmann,
            Some(Point::Euclidean(_)) => ManifoldKind::Euclidean,
            _ => ManifoldKind::Spd,
        });
        Ok(match kind {
            ManifoldKind::Spd => Manifold::Spd(match &self.metric {
                Some(m) => m.parse::<SpdMetric>().map_err(bad)?,
                None => SpdMetric::LogEuclidean,
            }),
            ManifoldKind::Grassmann => Manifold::Grassmann(match &self.metric {
                Some(m) => m.parse::<GrassmannMetric>().map_err(bad)?,
                None => GrassmannMetric::Projection,
            }),
            ManifoldKind::Euclidean => {
                if self.metric.is_some() {
                    return Err(CliError::Usage(
                        "the euclidean manifold takes no --metric".into(),
                    ));
                }
                Manifold::Euclidean
            }
        })
    }
}

/// Gaussian kernel selection.
#[derive(Debug, Args, Serialize)]
struct KernelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    metric: MetricArgs,
    /// Bandwidth γ > 0, or `median` for 1 / median squared distance.
    #[arg(long, default_value = "median")]
    gamma: String,
}

#[derive(Debug, Args, Serialize)]
struct DefinitenessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    metric: MetricArgs,
    /// SPD matrix size, or ambient dimension on the Grassmannian.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Subspace dimension on the Grassmannian.
    #[arg(long, default_value_t = 2)]
    subspace_dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10,100")]
    gamma_grid: Vec<f64>,
    /// Points per trial.
    #[arg(long, default_value_t = 40)]
    m: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct GramArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    /// Use the linear projection kernel ‖Y₁ᵀY₂‖²_F (Grassmann data, no γ).
    #[arg(long)]
    linear_projection: bool,
    /// Record the minimum eigenvalue in the output header.
    #[arg(long)]
    audit: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    /// Plain k-means on the vectorized points instead of a Gaussian kernel.
    #[arg(long)]
    linear: bool,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = manifold_rbf::learn::DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct KpcaArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    /// Number of components.
    #[arg(long)]
    l: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct KfdaArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    linear_projection: bool,
    /// Output dimensions, at most classes − 1 (default classes − 1).
    #[arg(long)]
    dims: Option<usize>,
    /// Within-class ridge (default 1e-4·trace/m).
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Ova,
    Ovo,
}

#[derive(Debug, Args, Serialize)]
struct SvmTrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Ovo)]
    mode: ModeArg,
    /// Cross-validation folds for a grid search over γ and C.
    #[arg(long)]
    cv: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10,100")]
    gamma_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10,100")]
    c_grid: Vec<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SvmPredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct MklTrainArgs {
    /// Gram matrix CSV; repeat once per kernel.
    #[arg(long = "gram", required = true)]
    grams: Vec<PathBuf>,
    /// JSON array of ±1 labels.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FeatureKind {
    Pedestrian,
    Texture,
    StructureTensor,
}

#[derive(Debug, Args, Serialize)]
struct CovdescArgs {
    /// Image (PGM or CSV); repeat for several windows or frames.
    #[arg(long = "image", required = true)]
    images: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = FeatureKind::Pedestrian)]
    features: FeatureKind,
    /// Rectangle `x0,y0,w,h`; repeatable. Defaults to the whole image.
    #[arg(long = "rect")]
    rects: Vec<String>,
    /// Regularization ε (default 1e-6·(trace + 1)).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Normalize each descriptor by the whole-window covariance.
    #[arg(long)]
    normalize: bool,
    /// Select this many subwindows from the candidate grid.
    #[arg(long)]
    select: Option<usize>,
    /// Per-image positive flags (1/0) used by --select.
    #[arg(long, value_delimiter = ',')]
    positives: Vec<u8>,
    #[arg(long, default_value_t = 0.75)]
    max_overlap: f64,
    #[arg(long, default_value_t = 3)]
    min_side: usize,
    /// Gaussian smoothing σ for structure tensors.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SubspaceArgs {
    /// CSV whose columns are the vectors of one set; repeatable.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Subspace dimension.
    #[arg(long)]
    r: usize,
    #[arg(long, value_delimiter = ',')]
    labels: Vec<i64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SynthKind {
    SpdBlobs,
    Grassmann,
    Rings,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 40)]
    per_cluster: usize,
    /// SPD size or ambient dimension.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 3)]
    subspace_dim: usize,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    spread: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("MANIFOLD_RBF_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            CliError::Usage(format!("MANIFOLD_RBF_THREADS must be a number, got '{v}'"))
        })?;
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|_| commands::run(&cli.command, cli.seed));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Usage => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Numerical => 3,
            })
        }
    }
}
