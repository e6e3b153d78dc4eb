fn main() {
    std::process::exit(fracpoincare::cli::main_with_args(std::env::args_os()));
}
