fn main() {
    std::process::exit(gpq::cli::main_with_args(std::env::args().collect()));
}
