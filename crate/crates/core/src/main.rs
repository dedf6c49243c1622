use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(cal_lab::cli::run(std::env::args_os()))
}
