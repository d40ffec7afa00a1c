use clap::Parser;

fn main() {
    let cli = frialab::cli::Cli::parse();
    std::process::exit(frialab::cli::run(cli));
}
