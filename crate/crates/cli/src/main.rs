use std::process::ExitCode;

fn main() -> ExitCode {
    explicable_cli::main_exit()
}
