use clap::Parser;
use tvwhittle_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    match tvwhittle_cli::run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
