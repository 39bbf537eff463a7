use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(msg) = ke_lab::configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(ke_lab::EXIT_VALIDATION as u8);
    }
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = ke_lab::run(std::env::args_os(), &mut out, &mut stderr.lock());
    if out.flush().is_err() {
        return ExitCode::from(ke_lab::EXIT_VALIDATION as u8);
    }
    ExitCode::from(code as u8)
}
