fn main() {
    std::process::exit(stabdef::cli::main_with_args(std::env::args_os()));
}
