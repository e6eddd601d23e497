fn main() {
    std::process::exit(fontcheck::cli::run());
}
