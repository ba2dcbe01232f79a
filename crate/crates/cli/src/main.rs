use std::process::ExitCode;

use clap::Parser;

use orthant_enet_cli::{build_config, execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = cli.command.split();
    let result = build_config(command, flags).and_then(|cfg| execute(&cfg));
    match result {
        Ok(cfg) => {
            eprintln!("seed {} ; outputs in {}", cfg.seed.unwrap_or_default(), cfg.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("orthant-enet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
