use clap::Parser;

use pcredml::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
