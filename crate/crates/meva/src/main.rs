use clap::Parser;

fn main() {
    let cli = meva::cli::Cli::parse();
    if let Err(e) = meva::cli::execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
