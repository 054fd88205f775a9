fn main() {
    std::process::exit(netdyad::cli::run(std::env::args_os()));
}
