fn main() {
    std::process::exit(inls_cli::run(std::env::args()));
}
