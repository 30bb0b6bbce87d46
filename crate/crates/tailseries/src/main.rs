use clap::Parser;

fn main() {
    let cli = tailseries::cli::Cli::parse();
    std::process::exit(tailseries::cli::run(cli));
}
