fn main() {
    std::process::exit(ggmsv::cli::main_with_args(std::env::args_os()));
}
