fn main() {
    std::process::exit(swival::cli::run(std::env::args_os()));
}
