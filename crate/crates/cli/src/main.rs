use clap::Parser;

fn main() {
    let cli = hypbrw_cli::Cli::parse();
    if let Err(e) = hypbrw_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
