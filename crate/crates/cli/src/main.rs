use clap::Parser;
use thermodiff_cli::commands;
use thermodiff_cli::config::Cli;

fn main() {
    // clap handles usage errors itself with exit code 2
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
