use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gradecast::commands::{self, TrainArgs};
use gradecast::CliError;
use gradecast_core::optim::AdamConfig;

/// Predict student performance class (L/M/H) from LMS activity records.
#[derive(Parser)]
#[command(name = "gradecast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and print category and count summaries.
    Inspect {
        data: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Train the classifier and write a model bundle.
    Train(TrainOpts),
    /// Score a model bundle on labeled data.
    Evaluate {
        model: PathBuf,
        data: PathBuf,
        /// Evaluate only the test rows listed in this split manifest.
        #[arg(long)]
        split_manifest: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Predict classes for each row of a CSV (Class column optional).
    Predict {
        model: PathBuf,
        data: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Render a training history CSV as SVG curves.
    Plot {
        history: PathBuf,
        #[arg(short, long, default_value = "history.svg")]
        output: PathBuf,
    },
}

#[derive(Args)]
struct TrainOpts {
    data: PathBuf,
    #[arg(short, long, default_value = "model.json")]
    output: PathBuf,
    /// Write per-epoch metrics as CSV.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Write the row partition as JSON.
    #[arg(long)]
    split_manifest: Option<PathBuf>,
    /// Feature schema JSON replacing the built-in one.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    val_fraction: f64,
    /// Fit the scaler on training rows only.
    #[arg(long)]
    scale_after_split: bool,
    /// Record train metrics with a full pass after each epoch.
    #[arg(long)]
    post_epoch_metrics: bool,
    #[arg(long, default_value_t = AdamConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = AdamConfig::default().beta1)]
    beta1: f64,
    #[arg(long, default_value_t = AdamConfig::default().beta2)]
    beta2: f64,
    #[arg(long, default_value_t = AdamConfig::default().epsilon)]
    epsilon: f64,
}

impl From<TrainOpts> for TrainArgs {
    fn from(o: TrainOpts) -> Self {
        TrainArgs {
            data: o.data,
            output: o.output,
            history: o.history,
            split_manifest: o.split_manifest,
            schema: o.schema,
            epochs: o.epochs,
            batch_size: o.batch_size,
            seed: o.seed,
            test_fraction: o.test_fraction,
            val_fraction: o.val_fraction,
            scale_after_split: o.scale_after_split,
            post_epoch_metrics: o.post_epoch_metrics,
            adam: AdamConfig {
                learning_rate: o.lr,
                beta1: o.beta1,
                beta2: o.beta2,
                epsilon: o.epsilon,
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    let out = &mut stdout.lock();
    match cli.command {
        Command::Inspect { data, json } => commands::inspect(&data, json, out),
        Command::Train(opts) => commands::train(&opts.into(), out),
        Command::Evaluate {
            model,
            data,
            split_manifest,
            json,
        } => commands::evaluate_cmd(&model, &data, split_manifest.as_deref(), json, out),
        Command::Predict { model, data, json } => commands::predict(&model, &data, json, out),
        Command::Plot { history, output } => commands::plot(&history, &output, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
