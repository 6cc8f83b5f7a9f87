use std::process::ExitCode;

fn main() -> ExitCode {
    lqglab_cli::run_cli(std::env::args_os())
}
