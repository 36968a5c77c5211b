use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tweetsift::cli::{self, RunConfig};
use tweetsift::ensemble::Scheme;

#[derive(Parser)]
#[command(
    name = "tweetsift",
    version,
    about = "Classify tweets as informative or uninformative: train, predict, ensemble, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-label counts for a tab-separated split file
    Stats {
        /// Split file (id<TAB>text[<TAB>label], optional "Id" header)
        input: PathBuf,
    },
    /// Fine-tune the toy encoder over the learning-rate grid
    Train {
        /// Flat key=value config file (see README for the key list)
        config: PathBuf,
    },
    /// Label a split file with a trained checkpoint
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Where to write id<TAB>LABEL lines
        #[arg(long)]
        output: PathBuf,
        /// Also write the per-model probability file consumed by `ensemble`
        #[arg(long)]
        probs: Option<PathBuf>,
    },
    /// Combine per-model probability files into one prediction file
    Ensemble {
        /// Probability files, one per model (repeat the flag)
        #[arg(long = "probs", required = true)]
        probs: Vec<PathBuf>,
        /// Combination rule: averaging or voting
        #[arg(long, default_value = "voting")]
        scheme: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a prediction file against gold labels, joined on id
    Evaluate {
        /// Labeled split file
        #[arg(long)]
        gold: PathBuf,
        /// Prediction file (id<TAB>LABEL)
        #[arg(long)]
        pred: PathBuf,
        /// Also print the report as JSON
        #[arg(long)]
        json: bool,
    },
}

fn run(command: Command) -> tweetsift::Result<()> {
    match command {
        Command::Stats { input } => {
            let stats = cli::cmd_stats(&input)?;
            println!("INFORMATIVE\t{}", stats.informative);
            println!("UNINFORMATIVE\t{}", stats.uninformative);
            println!("unlabeled\t{}", stats.unlabeled);
            println!("total\t{}", stats.total);
        }
        Command::Train { config } => {
            let config = RunConfig::from_file(&config)?;
            let manifest = cli::cmd_train(&config)?;
            println!(
                "best: lr={} epoch={} dev_f1={}",
                manifest.best_lr, manifest.best_epoch, manifest.dev_f1
            );
            println!("checkpoints written to {}", config.out_dir.display());
        }
        Command::Predict {
            checkpoint,
            input,
            output,
            probs,
        } => {
            let n = cli::cmd_predict(&checkpoint, &input, &output, probs.as_deref())?;
            println!("wrote {n} predictions to {}", output.display());
        }
        Command::Ensemble {
            probs,
            scheme,
            output,
        } => {
            let scheme: Scheme = scheme.parse()?;
            let n = cli::cmd_ensemble(&probs, scheme, &output)?;
            println!("wrote {n} {scheme} predictions to {}", output.display());
        }
        Command::Evaluate { gold, pred, json } => {
            let report = cli::cmd_evaluate(&gold, &pred)?;
            println!("{}", report.render());
            if json {
                println!("{}", report.to_json());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
