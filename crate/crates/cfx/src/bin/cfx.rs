fn main() {
    std::process::exit(cfx::cli::run());
}
