fn main() {
    std::process::exit(nsp::cli::main_with_args(std::env::args_os()));
}
