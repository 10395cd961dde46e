fn main() {
    std::process::exit(tendonkit::cli::run());
}
