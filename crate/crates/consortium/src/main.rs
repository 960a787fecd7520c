use clap::Parser;

fn main() {
    let cli = consortium::cli::Cli::parse();
    if let Err(e) = consortium::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
