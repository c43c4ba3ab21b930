fn main() {
    std::process::exit(histofuse::cli::run());
}
