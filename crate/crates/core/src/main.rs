fn main() {
    std::process::exit(spinhalf::cli::main_with_args(std::env::args_os()));
}
