fn main() {
    std::process::exit(magdiff::cli::main_with_args(std::env::args_os()));
}
