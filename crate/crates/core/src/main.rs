use std::process::ExitCode;

fn main() -> ExitCode {
    rpqds::cli::main_entry()
}
