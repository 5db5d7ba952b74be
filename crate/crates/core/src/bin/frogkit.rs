fn main() {
    std::process::exit(frogkit::cli::run(std::env::args_os()));
}
