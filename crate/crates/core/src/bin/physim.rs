fn main() {
    std::process::exit(physim::cli::parse_and_dispatch(std::env::args_os()));
}
