fn main() {
    std::process::exit(spinstar::cli::main_with_args(std::env::args_os()));
}
