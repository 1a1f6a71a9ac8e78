use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(lattice_bernstein::cli::run_from(std::env::args_os()))
}
