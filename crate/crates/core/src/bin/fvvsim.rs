fn main() {
    std::process::exit(fvvsim::cli::main_with(std::env::args_os()));
}
