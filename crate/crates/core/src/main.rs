fn main() {
    std::process::exit(ergodic_transport::cli::main_with_args(std::env::args_os()));
}
