mod batch;
mod eval;
mod options;
mod read;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Reads the level from photographed linear scales.
#[derive(Parser)]
#[command(name = "scaleread", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read one image and print the level as key=value pairs.
    Read(read::ReadArgs),
    /// Render synthetic scale images with ground-truth manifests.
    Synth(synth::SynthArgs),
    /// Accuracy report for paired aspirating/dispensing measurements.
    Eval(eval::EvalArgs),
    /// Read every image in a directory and write a results CSV.
    Batch(batch::BatchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Read(a) => read::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Batch(a) => batch::run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
