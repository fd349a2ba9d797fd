fn main() {
    std::process::exit(vesselmark::cli::run(std::env::args_os()));
}
