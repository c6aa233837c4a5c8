use clap::Parser;

fn main() {
    std::process::exit(callias::cli::main_with(callias::cli::Args::parse()));
}
