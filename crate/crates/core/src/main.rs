fn main() {
    std::process::exit(continuity_control::cli::main_with_args(std::env::args_os()));
}
