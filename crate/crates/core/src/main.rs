fn main() {
    std::process::exit(curvest::cli::main_with_args(std::env::args_os()));
}
