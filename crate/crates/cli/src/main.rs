use std::io;

use clap::Parser;
use sure_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let status = run(cli, &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(status.code());
}
