use clap::Parser;
use heiswhit_cli::{run, Cli, RunConfig, EXIT_ERROR};

fn main() {
    let config = RunConfig::from(Cli::parse());
    let code = match run(&config) {
        Ok(report) => report.exit_code(),
        Err(e) => {
            eprintln!("heiswhit: {e}");
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}
