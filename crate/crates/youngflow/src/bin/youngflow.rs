fn main() {
    std::process::exit(youngflow::cli::main_with_args(std::env::args_os()));
}
