use clap::Parser;

use klein_scatter::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
