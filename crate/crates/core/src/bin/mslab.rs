fn main() {
    std::process::exit(mslab::cli::run(std::env::args_os()));
}
