mod commands;
mod manifest;

use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    // Exit code contract: 0 success, 1 validation (including bad usage),
    // 2 I/O, 3 internal. Clap's default exit code for usage errors is 2,
    // which would collide with the I/O code, so map it ourselves.
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(commands::run(cli));
}
