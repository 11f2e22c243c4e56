use clap::Parser;
use mfcomp_cli::args::Cli;
use mfcomp_cli::error::{CliError, EXIT_USAGE};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if e.exit_code() == 0 => e.exit(),
        Err(e) => {
            let _ = e.print();
            eprintln!("{}", CliError::Usage(e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string()).to_json());
            std::process::exit(EXIT_USAGE);
        }
    };
    match mfcomp_cli::run(&cli.command, argv) {
        Ok(manifest) => {
            for f in &manifest.outputs {
                println!("{f}", f = f.path);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
