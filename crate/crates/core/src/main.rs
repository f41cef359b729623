fn main() {
    std::process::exit(svarkit::cli::run(std::env::args()));
}
