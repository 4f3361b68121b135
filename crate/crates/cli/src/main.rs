use clap::Parser;
use rulevae_cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
