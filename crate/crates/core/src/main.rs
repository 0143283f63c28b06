fn main() {
    std::process::exit(pcfdist::cli::run(std::env::args_os()));
}
