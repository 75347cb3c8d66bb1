fn main() {
    std::process::exit(stabgi::cli::main_with_args(std::env::args_os()));
}
