use std::process::ExitCode;

fn main() -> ExitCode {
    randers::cli::main()
}
