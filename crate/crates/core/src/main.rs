fn main() {
    std::process::exit(edgemarket::cli::run_command(std::env::args_os()));
}
