use clap::Parser;

fn main() {
    let cli = mot::cli::Cli::parse();
    std::process::exit(mot::cli::run(cli));
}
