use std::process::ExitCode;

fn main() -> ExitCode {
    treqs::cli::main()
}
