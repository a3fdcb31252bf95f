fn main() {
    std::process::exit(qqchart::cli::run_command(std::env::args_os()));
}
