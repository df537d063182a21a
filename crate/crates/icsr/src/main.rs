fn main() {
    std::process::exit(icsr::cli::run_cli(std::env::args_os()));
}
