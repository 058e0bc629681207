use clap::Parser;

fn main() {
    let cli = inbed::cli::Cli::parse();
    std::process::exit(inbed::cli::run(cli));
}
