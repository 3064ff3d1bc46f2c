fn main() {
    std::process::exit(alvs::cli::main_with_args(std::env::args_os()));
}
