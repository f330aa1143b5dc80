use std::process::ExitCode;

fn main() -> ExitCode {
    boson_bins::cli::main_with_args(std::env::args_os())
}
