fn main() {
    std::process::exit(qpmap::cli::main_with_args(std::env::args_os()));
}
