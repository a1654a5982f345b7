fn main() {
    std::process::exit(logschrod::cli::run(std::env::args_os()));
}
