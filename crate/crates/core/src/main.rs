use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use pipdim::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(threads) = std::env::var("PIP_THREADS").ok().and_then(|v| v.parse().ok()) {
        pipdim::exec::init_threads(threads);
    }
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut warn = stderr.lock();
    match run(&cli.command, &mut out, &mut warn) {
        Ok(()) => {
            let _ = out.flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = writeln!(warn, "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
