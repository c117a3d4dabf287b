fn main() {
    std::process::exit(derham::cli::run(std::env::args()));
}
