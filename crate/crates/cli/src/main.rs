//! Single executable exposing the captioning pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/validation error,
//! 3 numerical failure.

mod commands;
mod manifest;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cavp",
    version,
    about = "Context-aware visual-policy captioning: data, training, decoding, metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic compositional-scene dataset
    Datagen(commands::datagen::DatagenArgs),
    /// Train a model (cross-entropy or self-critical phase)
    Train(commands::train::TrainArgs),
    /// Decode a split and score it
    Eval(commands::eval::EvalArgs),
    /// Score an existing decode file against references
    Score(commands::score::ScoreArgs),
    /// Run the double-precision gradient-check suite
    Gradcheck(commands::gradcheck::GradcheckArgs),
    /// Export a per-step attention trace for one image
    Trace(commands::trace::TraceArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Datagen(args) => commands::datagen::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Score(args) => commands::score::run(args),
        Command::Gradcheck(args) => commands::gradcheck::run(args),
        Command::Trace(args) => commands::trace::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
