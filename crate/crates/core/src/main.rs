fn main() {
    std::process::exit(olab::cli::run(std::env::args_os().collect()));
}
