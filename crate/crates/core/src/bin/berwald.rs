fn main() {
    std::process::exit(berwald::cli::run(std::env::args_os()));
}
