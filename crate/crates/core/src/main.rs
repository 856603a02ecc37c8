use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(blightwave::cli::main_entry() as u8)
}
