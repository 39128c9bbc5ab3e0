fn main() {
    let code = phishcollect::cli::run(std::env::args().collect());
    std::process::exit(code);
}
