use clap::Parser;

fn main() {
    let cli = quartile_cli::Cli::parse();
    std::process::exit(quartile_cli::run(cli));
}
