use std::process::ExitCode;

fn main() -> ExitCode {
    pfl::cli::main_entry()
}
