fn main() {
    std::process::exit(pqwalk::cli::run(std::env::args_os()));
}
