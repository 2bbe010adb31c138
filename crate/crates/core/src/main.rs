use clap::Parser;

fn main() {
    let cli = sl2_ergodic::cli::Cli::parse();
    std::process::exit(sl2_ergodic::cli::run(cli));
}
