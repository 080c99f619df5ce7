fn main() {
    std::process::exit(korn_lab::cli::main_with_args(std::env::args_os()));
}
