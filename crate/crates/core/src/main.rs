fn main() {
    std::process::exit(synthcode::cli::main_with(std::env::args_os()));
}
