fn main() {
    std::process::exit(bea::cli::main_with(std::env::args_os()));
}
