fn main() {
    std::process::exit(mdsat::cli::run(std::env::args().collect()));
}
