use clap::Parser;
use std::path::PathBuf;

/// Batch solver and verifier for the discrete logarithmic Schrödinger
/// model on lattices and finite graphs.
///
/// Runs the single action described by a TOML configuration and writes a
/// JSON run record plus CSV tables into the configured output directory.
/// Log verbosity is controlled by the RUST_LOG environment variable.
#[derive(Parser)]
#[command(name = "loglat", version)]
struct Args {
    /// Path to the TOML run configuration.
    config: PathBuf,
    /// Override [solver].seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    env_logger::init();
    let args = Args::parse();
    std::process::exit(loglat_cli::runner::execute(&args.config, args.seed));
}
