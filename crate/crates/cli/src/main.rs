fn main() {
    std::process::exit(greenscan_cli::run_from(std::env::args_os()));
}
