fn main() {
    std::process::exit(gfdm::cli::main_with_args(std::env::args_os()));
}
