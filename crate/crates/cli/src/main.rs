fn main() {
    std::process::exit(cliffdyn_cli::run_cli(std::env::args_os()));
}
