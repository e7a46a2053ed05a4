use std::io::Write;

use clap::Parser;
use lurye_cli::commands::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let (exit, out, err) = execute(&cli);
    print!("{out}");
    eprint!("{err}");
    let _ = std::io::stdout().flush();
    std::process::exit(exit as i32);
}
