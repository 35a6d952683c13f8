fn main() {
    std::process::exit(hylem::cli::run(std::env::args_os()));
}
