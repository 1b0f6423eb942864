fn main() {
    std::process::exit(rough_plaplace::cli::run_cli(std::env::args_os()));
}
