use clap::Parser;

fn main() {
    let cli = nhspec_cli::cli::Cli::parse();
    if let Err(err) = nhspec_cli::commands::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
