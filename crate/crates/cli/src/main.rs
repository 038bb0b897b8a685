use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use moodpipe::imgcore::Rect;
use moodpipe_cli::*;

/// Facial expression recognition from geometric features.
#[derive(Parser)]
#[command(name = "moodpipe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a labeled synthetic face corpus.
    Synth {
        /// Faces per expression.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.15)]
        jitter: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print detected faces as `cx cy r x1 y1 x2 y2 confidence`.
    Detect {
        image: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write a copy with circles and boxes drawn.
        #[arg(long)]
        annotate: Option<PathBuf>,
    },
    /// Print the feature vector He,We,Hm,Wm,Rul,Rll,NL.
    Extract {
        image: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Skip detection and use this face box: x1,y1,x2,y2.
        #[arg(long, value_parser = parse_bbox)]
        bbox: Option<Rect>,
        /// Directory for the crop and feature masks.
        #[arg(long)]
        dump_masks: Option<PathBuf>,
    },
    /// Extract features for a manifest into a CSV cache.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the expression classifier.
    Train {
        #[arg(long, required_unless_present = "features")]
        manifest: Option<PathBuf>,
        /// Precomputed feature CSV instead of images.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
    },
    /// Classify the face in one image.
    Predict {
        image: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Accuracy table and confusion matrix on a labeled manifest.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
        /// Warn when test images also appear here.
        #[arg(long)]
        train_manifest: Option<PathBuf>,
    },
    /// Print the default configuration file.
    Defaults,
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Synth { n, jitter, seed, out } => cmd_synth(n, jitter, seed, &out),
        Command::Detect { image, config, annotate } => cmd_detect(&image, &load_config(config.as_deref())?, annotate.as_deref()),
        Command::Extract { image, config, bbox, dump_masks } => {
            cmd_extract(&image, &load_config(config.as_deref())?, bbox, dump_masks.as_deref())
        }
        Command::Features { manifest, config, out } => {
            let (text, warnings) = cmd_features(&manifest, &load_config(config.as_deref())?, &out)?;
            warn_all(&warnings);
            Ok(text)
        }
        Command::Train { manifest, features, config, model } => {
            let cfg = load_config(config.as_deref())?;
            let outcome = cmd_train(manifest.as_deref(), features.as_deref(), &cfg, &model)?;
            warn_all(&outcome.warnings);
            Ok(outcome.report)
        }
        Command::Predict { image, model, config } => cmd_predict(&image, &model, &load_config(config.as_deref())?),
        Command::Eval { manifest, model, config, csv, train_manifest } => {
            let cfg = load_config(config.as_deref())?;
            let outcome = cmd_eval(&manifest, &model, &cfg, csv, train_manifest.as_deref())?;
            warn_all(&outcome.warnings);
            Ok(outcome.text)
        }
        Command::Defaults => Ok(moodpipe::config::PipelineConfig::default().to_text()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
