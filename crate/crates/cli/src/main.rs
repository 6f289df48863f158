use std::process::ExitCode;

fn main() -> ExitCode {
    segmix_cli::run(std::env::args_os())
}
