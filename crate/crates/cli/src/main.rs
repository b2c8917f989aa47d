//! `kakamatch`: frame selection, feature caching, matching, ranking and
//! evaluation over a directory of PGM/PPM images.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kakamatch::config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "kakamatch", version, about = "Unsupervised SIFT matching for individual re-identification")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// `key = value` config file.
    #[arg(long, global = true, env = "KAKAMATCH_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the config `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Rewrite outputs that already exist.
    #[arg(long, global = true)]
    force: bool,
    /// Overrides one config key, e.g. `--set match.strategy=nndr`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RankFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List frames whose probe pixel passes the intensity heuristic.
    SelectFrames {
        in_dir: PathBuf,
        /// Manifest path; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Extract and cache SIFT features for every image in a directory.
    Features {
        in_dir: PathBuf,
        out_dir: PathBuf,
        /// Corpus-level background image. Enables masked extraction;
        /// `<in_dir>/backgrounds/<clip>.pgm` takes precedence when present.
        #[arg(long)]
        bg: Option<PathBuf>,
    },
    /// Match two feature files and report the surviving matches.
    Match {
        feat_a: PathBuf,
        feat_b: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Rank a gallery of feature files against one query image.
    Rank {
        query: String,
        feature_dir: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: RankFormat,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Top-X accuracy tables over the labelled images of a feature directory.
    Evaluate {
        feature_dir: PathBuf,
        labels: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1", value_parser = positive)]
        x: Vec<usize>,
        /// JSON report path; the text tables go to stdout when set.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write the synthetic benchmark corpus.
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        individuals: usize,
        #[arg(long, default_value_t = 12)]
        views: usize,
        #[arg(long, default_value_t = kakamatch::eval::synth::DEFAULT_WIDTH)]
        width: usize,
        #[arg(long, default_value_t = kakamatch::eval::synth::DEFAULT_HEIGHT)]
        height: usize,
    },
    /// Draw a match report over the two images, side by side, as PPM.
    Visualize {
        image_a: PathBuf,
        image_b: PathBuf,
        report: PathBuf,
        out: PathBuf,
    },
}

fn positive(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("`{s}` is not a positive integer")),
    }
}

fn load_config(opts: &GlobalOpts) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &opts.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    for kv in &opts.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| commands::UsageError(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| commands::UsageError(e.to_string()))?;
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| commands::UsageError(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global()?;
    }
    let cfg = load_config(&cli.global)?;
    let force = cli.global.force;
    match cli.command {
        Command::SelectFrames { in_dir, out } => commands::select_frames(&in_dir, out.as_deref()),
        Command::Features { in_dir, out_dir, bg } => commands::features(&in_dir, &out_dir, bg.as_deref(), &cfg, force),
        Command::Match { feat_a, feat_b, out } => commands::match_files(&feat_a, &feat_b, out.as_deref(), &cfg),
        Command::Rank {
            query,
            feature_dir,
            format,
            out,
        } => commands::rank(&query, &feature_dir, matches!(format, RankFormat::Csv), out.as_deref(), &cfg),
        Command::Evaluate {
            feature_dir,
            labels,
            x,
            out,
        } => commands::evaluate(&feature_dir, &labels, &x, out.as_deref(), &cfg),
        Command::Synth {
            out_dir,
            individuals,
            views,
            width,
            height,
        } => commands::synth(&out_dir, individuals, views, width, height, &cfg, force),
        Command::Visualize {
            image_a,
            image_b,
            report,
            out,
        } => commands::visualize(&image_a, &image_b, &report, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<commands::UsageError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
