fn main() {
    std::process::exit(superhedge::cli::run_to_stdout(std::env::args().skip(1)));
}
