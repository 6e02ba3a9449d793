mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "nucleoforge",
    version,
    about = "Synthetic nuclei masks, contour losses, and evaluation metrics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate batches of synthetic nuclei label maps
    GenMasks {
        /// Pipeline config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Number of label maps to generate
        #[arg(long)]
        count: usize,
        /// Output directory (falls back to out_dir from the config)
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides the config)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Distance, skeleton, and skeleton-map rasters for a label map
    TopoMap {
        /// Input label map (16-bit PNG)
        labels: PathBuf,
        /// Output path prefix, e.g. out/img writes out/img_distance.pfm etc.
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Contour loss terms for an image against a label map
    Loss {
        /// Grayscale image (PNG)
        image: PathBuf,
        /// Label map defining the contours (16-bit PNG)
        labels: PathBuf,
        /// Length scale for the contour losses
        #[arg(long)]
        lambda: f64,
        /// Weight of the sharpness term in the total
        #[arg(long)]
        beta: f64,
        /// Discriminator score on real data, in [0, 1]
        #[arg(long, requires = "d_fake")]
        d_real: Option<f64>,
        /// Discriminator score on generated data, in [0, 1]
        #[arg(long, requires = "d_real")]
        d_fake: Option<f64>,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gradient descent on the contour losses for one image
    Optimize {
        /// Grayscale image (PNG)
        image: PathBuf,
        /// Label map defining the contours (16-bit PNG)
        labels: PathBuf,
        /// Length scale for the contour losses
        #[arg(long)]
        lambda: f64,
        /// Weight of the sharpness term in the total
        #[arg(long)]
        beta: f64,
        /// Initial gradient step size
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Maximum number of descent steps
        #[arg(long, default_value_t = 200)]
        iters: usize,
        /// Output path prefix for _before.png, _after.png, _report.json
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Image quality metrics over a list of image pairs
    Quality {
        /// JSON list of {"a": path, "b": path} pairs
        pairs: PathBuf,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Pipeline config to validate against (optional)
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Segmentation metrics for predictions against ground truth
    SegEval {
        /// Directory of predicted label maps (16-bit PNG)
        pred: PathBuf,
        /// Directory of ground-truth label maps with matching names
        gt: PathBuf,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split touching nuclei in a binary mask via marker watershed
    Watershed {
        /// Input mask (16-bit PNG, nonzero = foreground)
        mask: PathBuf,
        /// Output label map path
        #[arg(long)]
        out: PathBuf,
        /// Minimum peak depth for markers (default 1.0)
        #[arg(long)]
        h_maxima: Option<f64>,
        /// Pipeline config supplying watershed_h (optional)
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn init_thread_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NUCLEOFORGE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        CliError::Config(format!(
            "NUCLEOFORGE_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    if threads == 0 {
        return Err(CliError::Config(
            "NUCLEOFORGE_THREADS must be a positive integer, got \"0\"".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("failed to size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::GenMasks {
            config,
            count,
            out,
            seed,
        } => commands::gen_masks(&config, count, out, seed),
        Cmd::TopoMap { labels, out_prefix } => commands::topo_map(&labels, &out_prefix),
        Cmd::Loss {
            image,
            labels,
            lambda,
            beta,
            d_real,
            d_fake,
            out,
        } => commands::loss(&image, &labels, lambda, beta, d_real, d_fake, out.as_deref()),
        Cmd::Optimize {
            image,
            labels,
            lambda,
            beta,
            step,
            iters,
            out_prefix,
        } => commands::optimize(&image, &labels, lambda, beta, step, iters, &out_prefix),
        Cmd::Quality { pairs, out, config } => {
            commands::quality(&pairs, out.as_deref(), config.as_deref())
        }
        Cmd::SegEval { pred, gt, out } => commands::seg_eval(&pred, &gt, out.as_deref()),
        Cmd::Watershed {
            mask,
            out,
            h_maxima,
            config,
        } => commands::watershed(&mask, &out, h_maxima, config.as_deref()),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = init_thread_pool().and_then(|()| run(cli)) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
