fn main() {
    std::process::exit(ronfa_cli::run_cli(std::env::args_os()));
}
