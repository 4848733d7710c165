use clap::Parser;

fn main() {
    let cli = cli_runner::Cli::parse();
    std::process::exit(cli_runner::run(&cli));
}
