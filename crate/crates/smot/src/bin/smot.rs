fn main() {
    std::process::exit(smot::cli::main_with_args(std::env::args_os()));
}
