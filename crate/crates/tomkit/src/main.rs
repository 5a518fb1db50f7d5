fn main() {
    std::process::exit(tomkit::cli::run(std::env::args_os()));
}
