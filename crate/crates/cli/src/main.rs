//! `hyperdoc`: train and query hypertext document embeddings.

mod args;
mod commands;
mod config;
mod error;

use clap::Parser;

fn main() {
    let cli = args::Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Err(e) = commands::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
