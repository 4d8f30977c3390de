fn main() {
    std::process::exit(nagm::cli::run(std::env::args_os()));
}
