fn main() {
    std::process::exit(sepmark::cli::run(std::env::args_os()));
}
