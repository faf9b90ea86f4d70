use std::process::ExitCode;

fn main() -> ExitCode {
    let code = epidelay::cli::execute(std::env::args_os());
    ExitCode::from(code as u8)
}
