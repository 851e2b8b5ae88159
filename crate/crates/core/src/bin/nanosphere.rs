fn main() {
    std::process::exit(nanosphere::cli::run(std::env::args().collect()));
}
